#include "adalam/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>
#include <system_error>

namespace adalam {
namespace {

std::string fmt_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

// Line-by-line reader that reports 1-based line numbers.
class LineReader {
 public:
  LineReader(const std::string& text, std::string source)
      : text_(text), source_(std::move(source)) {}

  bool next(std::vector<std::string_view>& tokens) {
    if (pos_ >= text_.size()) return false;
    std::size_t end = text_.find('\n', pos_);
    if (end == std::string::npos) end = text_.size();
    tokens = split(std::string_view(text_).substr(pos_, end - pos_));
    pos_ = end + 1;
    ++line_;
    return true;
  }

  /// Next non-blank line, or false at end of input.
  bool next_record(std::vector<std::string_view>& tokens) {
    while (next(tokens)) {
      if (!tokens.empty()) return true;
    }
    return false;
  }

  std::size_t line() const { return line_; }

  [[noreturn]] void fail(const std::string& what, std::size_t at = 0) const {
    throw ParseError(source_, at == 0 ? line_ : at, what);
  }

  double real(std::string_view tok) const {
    double v = 0.0;
    if (tok == "inf" || tok == "+inf" || tok == "Inf") return HUGE_VAL;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
      fail("invalid number '" + std::string(tok) + "'");
    }
    return v;
  }

  double finite_real(std::string_view tok) const {
    const double v = real(tok);
    if (!std::isfinite(v)) fail("non-finite value '" + std::string(tok) + "'");
    return v;
  }

  long long integer(std::string_view tok) const {
    long long v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
      fail("invalid integer '" + std::string(tok) + "'");
    }
    return v;
  }

  std::size_t count(std::string_view tok) const {
    const long long v = integer(tok);
    if (v < 0) fail("negative count '" + std::string(tok) + "'");
    return static_cast<std::size_t>(v);
  }

  bool flag(std::string_view tok) const {
    if (tok == "0") return false;
    if (tok == "1") return true;
    fail("expected 0 or 1, got '" + std::string(tok) + "'");
  }

 private:
  const std::string& text_;
  std::string source_;
  std::size_t pos_ = 0;
  std::size_t line_ = 0;
};

void expect_header(LineReader& in, std::vector<std::string_view>& tok,
                   const char* magic, std::size_t fields) {
  if (!in.next(tok) || tok.empty()) in.fail("missing header", 1);
  if (tok[0] != magic) {
    in.fail("bad magic '" + std::string(tok[0]) + "', expected " + magic);
  }
  if (tok.size() != fields) {
    in.fail("header must have " + std::to_string(fields) + " fields");
  }
  if (tok[1] != kFormatVersion) {
    in.fail("unsupported version '" + std::string(tok[1]) + "'");
  }
}

// Reads exactly `count` records, then requires end of input.
template <typename Fn>
void read_records(LineReader& in, std::size_t count, Fn&& on_record) {
  std::vector<std::string_view> tok;
  for (std::size_t i = 0; i < count; ++i) {
    if (!in.next_record(tok)) {
      in.fail("expected " + std::to_string(count) + " records, found " +
                  std::to_string(i),
              in.line() + 1);
    }
    on_record(tok);
  }
  if (in.next_record(tok)) {
    in.fail("more records than the declared count " + std::to_string(count));
  }
}

}  // namespace

ParseError::ParseError(const std::string& source, std::size_t line,
                       const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + what),
      line_(line) {}

std::string format_keypoints(const ImageSize& size, const KeypointSet& keypoints) {
  std::string out;
  out += std::string(kKeypointMagic) + " " + kFormatVersion + " " +
         std::to_string(keypoints.size()) + " " + std::to_string(keypoints.dim()) +
         " " + std::to_string(size.width) + " " + std::to_string(size.height) + "\n";
  for (const auto& kp : keypoints) {
    out += fmt_real(kp.x()) + " " + fmt_real(kp.y()) + " " + fmt_real(kp.sigma) + " " +
           fmt_real(wrap_angle(kp.alpha));
    for (Eigen::Index k = 0; k < kp.descriptor.size(); ++k) {
      out += " " + fmt_real(kp.descriptor[k]);
    }
    out += "\n";
  }
  return out;
}

KeypointFile parse_keypoints(const std::string& text, const std::string& source) {
  LineReader in(text, source);
  std::vector<std::string_view> tok;
  expect_header(in, tok, kKeypointMagic, 6);
  const std::size_t count = in.count(tok[2]);
  const std::size_t dim = in.count(tok[3]);
  const long long w = in.integer(tok[4]);
  const long long h = in.integer(tok[5]);
  if (w <= 0 || h <= 0) in.fail("image size must be positive");
  if (dim < 1 && count > 0) in.fail("descriptor dimension must be >= 1");

  std::vector<Keypoint> kps;
  kps.reserve(count);
  read_records(in, count, [&](const std::vector<std::string_view>& row) {
    if (row.size() != 4 + dim) {
      in.fail("expected " + std::to_string(4 + dim) + " fields, got " +
              std::to_string(row.size()));
    }
    Eigen::VectorXd d(static_cast<Eigen::Index>(dim));
    for (std::size_t k = 0; k < dim; ++k) d[static_cast<Eigen::Index>(k)] = in.finite_real(row[4 + k]);
    try {
      kps.emplace_back(in.finite_real(row[0]), in.finite_real(row[1]),
                       in.finite_real(row[2]), in.finite_real(row[3]), std::move(d));
    } catch (const InvalidArgument& e) {
      in.fail(e.what());
    }
  });
  return {ImageSize(static_cast<int>(w), static_cast<int>(h)), KeypointSet(std::move(kps))};
}

std::string format_matches(const std::vector<PutativeMatch>& matches,
                           const std::vector<bool>* gt) {
  if (gt && gt->size() != matches.size()) {
    throw InvalidArgument("format_matches: label count differs from match count");
  }
  std::string out = std::string(kMatchMagic) + " " + kFormatVersion + " " +
                    std::to_string(matches.size()) + " " + (gt ? "1" : "0") + "\n";
  for (std::size_t i = 0; i < matches.size(); ++i) {
    const auto& m = matches[i];
    out += std::to_string(m.idx1) + " " + std::to_string(m.idx2) + " " + fmt_real(m.dist) +
           " " + fmt_real(m.ratio);
    if (gt) out += (*gt)[i] ? " 1" : " 0";
    out += "\n";
  }
  return out;
}

MatchFile parse_matches(const std::string& text, const std::string& source) {
  LineReader in(text, source);
  std::vector<std::string_view> tok;
  expect_header(in, tok, kMatchMagic, 4);
  const std::size_t count = in.count(tok[2]);
  const bool has_gt = in.flag(tok[3]);
  MatchFile file;
  file.matches.reserve(count);
  if (has_gt) file.gt_inlier.emplace();
  read_records(in, count, [&](const std::vector<std::string_view>& row) {
    const std::size_t fields = has_gt ? 5 : 4;
    if (row.size() != fields) {
      in.fail("expected " + std::to_string(fields) + " fields, got " +
              std::to_string(row.size()));
    }
    try {
      file.matches.emplace_back(in.count(row[0]), in.count(row[1]),
                                in.finite_real(row[2]), in.finite_real(row[3]));
    } catch (const InvalidArgument& e) {
      in.fail(e.what());
    }
    if (has_gt) file.gt_inlier->push_back(in.flag(row[4]));
  });
  return file;
}

std::string format_seed_reports(const std::vector<SeedReport>& reports) {
  std::string out = std::string(kSeedMagic) + " " + kFormatVersion + " " +
                    std::to_string(reports.size()) + "\n";
  for (const auto& r : reports) {
    out += std::to_string(r.seed_match) + " " + std::to_string(r.best_iteration) + " " +
           std::to_string(r.inlier_count) + " " + (r.accepted ? "1" : "0") + "\n";
  }
  return out;
}

std::vector<SeedReport> parse_seed_reports(const std::string& text,
                                           const std::string& source) {
  LineReader in(text, source);
  std::vector<std::string_view> tok;
  expect_header(in, tok, kSeedMagic, 3);
  std::vector<SeedReport> out;
  read_records(in, in.count(tok[2]), [&](const std::vector<std::string_view>& row) {
    if (row.size() != 4) in.fail("expected 4 fields");
    SeedReport r;
    r.seed_match = in.count(row[0]);
    r.best_iteration = static_cast<int>(in.integer(row[1]));
    r.inlier_count = in.count(row[2]);
    r.accepted = in.flag(row[3]);
    out.push_back(r);
  });
  return out;
}

std::vector<double> parse_errors(const std::string& text, const std::string& source) {
  LineReader in(text, source);
  std::vector<std::string_view> tok;
  std::vector<double> out;
  while (in.next(tok)) {
    if (tok.empty() || tok[0].front() == '#') continue;
    if (tok.size() != 1) in.fail("expected one value per line");
    const double v = in.real(tok[0]);
    if (std::isnan(v) || v < 0.0) in.fail("error values must be >= 0 or inf");
    out.push_back(v);
  }
  if (out.empty()) throw ParseError(source, 0, "no error values");
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file_atomic(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw std::runtime_error("failed writing " + path.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

KeypointFile read_keypoints(const std::filesystem::path& path) {
  return parse_keypoints(read_text_file(path), path.string());
}

void write_keypoints(const std::filesystem::path& path, const ImageSize& size,
                     const KeypointSet& keypoints) {
  write_text_file_atomic(path, format_keypoints(size, keypoints));
}

MatchFile read_matches(const std::filesystem::path& path) {
  return parse_matches(read_text_file(path), path.string());
}

void write_matches(const std::filesystem::path& path,
                   const std::vector<PutativeMatch>& matches,
                   const std::vector<bool>* gt) {
  write_text_file_atomic(path, format_matches(matches, gt));
}

std::vector<double> read_errors(const std::filesystem::path& path) {
  return parse_errors(read_text_file(path), path.string());
}

}  // namespace adalam
