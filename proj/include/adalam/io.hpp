#pragma once

#include "adalam/core.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace adalam {

/// Malformed input file. line() is 1-based; 0 when not tied to a line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Text formats. One header line, then one whitespace-separated record per
// line; reals are written with 9 significant digits.
//
//   keypoints:  ADALAM-KP 1 <count> <dim> <width> <height>
//               x y sigma alpha d0 ... d{dim-1}
//   matches:    ADALAM-MATCHES 1 <count> <has_gt 0|1>
//               idx1 idx2 dist ratio [gt 0|1]
//   seeds:      ADALAM-SEEDS 1 <count>
//               seed_match best_iteration inlier_count accepted
//   errors:     one value per line, "inf" for a failure; '#' starts a comment

struct KeypointFile {
  ImageSize size;
  KeypointSet keypoints;
};

struct MatchFile {
  std::vector<PutativeMatch> matches;
  std::optional<std::vector<bool>> gt_inlier;
};

inline constexpr const char* kKeypointMagic = "ADALAM-KP";
inline constexpr const char* kMatchMagic = "ADALAM-MATCHES";
inline constexpr const char* kSeedMagic = "ADALAM-SEEDS";
inline constexpr const char* kFormatVersion = "1";

std::string format_keypoints(const ImageSize& size, const KeypointSet& keypoints);
KeypointFile parse_keypoints(const std::string& text,
                             const std::string& source = "<keypoints>");

std::string format_matches(const std::vector<PutativeMatch>& matches,
                           const std::vector<bool>* gt_inlier = nullptr);
MatchFile parse_matches(const std::string& text,
                        const std::string& source = "<matches>");

std::string format_seed_reports(const std::vector<SeedReport>& reports);
std::vector<SeedReport> parse_seed_reports(const std::string& text,
                                           const std::string& source = "<seeds>");

std::vector<double> parse_errors(const std::string& text,
                                 const std::string& source = "<errors>");

// File wrappers. Writers go through a temporary file and rename, so a failed
// write never leaves a partial file at the destination.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file_atomic(const std::filesystem::path& path, const std::string& text);

KeypointFile read_keypoints(const std::filesystem::path& path);
void write_keypoints(const std::filesystem::path& path, const ImageSize& size,
                     const KeypointSet& keypoints);
MatchFile read_matches(const std::filesystem::path& path);
void write_matches(const std::filesystem::path& path,
                   const std::vector<PutativeMatch>& matches,
                   const std::vector<bool>* gt_inlier = nullptr);
std::vector<double> read_errors(const std::filesystem::path& path);

}  // namespace adalam
