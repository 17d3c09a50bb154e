#include "smdt/json_source.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <streambuf>

#include <fmt/format.h>

namespace smdt {
namespace {

// Streambuf over an in-memory string that exposes how many characters the
// parser has consumed so far.
class OffsetBuf : public std::streambuf {
 public:
  explicit OffsetBuf(std::string& text) {
    char* begin = text.data();
    setg(begin, begin, begin + text.size());
  }
  std::size_t consumed() const { return static_cast<std::size_t>(gptr() - eback()); }
};

class LineTable {
 public:
  explicit LineTable(std::string_view text) : text_(text) {
    starts_.push_back(0);
    for (std::size_t i = 0; i < text.size(); ++i) {
      if (text[i] == '\n') starts_.push_back(i + 1);
    }
  }

  // Line/column (both 1-based) of byte `offset`.
  std::pair<int, int> locate(std::size_t offset) const {
    auto it = std::upper_bound(starts_.begin(), starts_.end(), offset);
    auto line = static_cast<int>(it - starts_.begin());
    auto col = static_cast<int>(offset - starts_[line - 1]) + 1;
    return {line, col};
  }

  // Line of the last non-whitespace character before `consumed`. The lexer may
  // have read one lookahead character past a number, which is a delimiter or
  // whitespace; skipping whitespace keeps the line on the token itself.
  int token_line(std::size_t consumed) const {
    std::size_t i = std::min(consumed, text_.size());
    while (i > 0) {
      char c = text_[i - 1];
      if (c != ' ' && c != '\n' && c != '\r' && c != '\t') break;
      --i;
    }
    return locate(i == 0 ? 0 : i - 1).first;
  }

 private:
  std::string_view text_;
  std::vector<std::size_t> starts_;
};

// DOM-building SAX handler that also records the line of every value by its
// JSON pointer.
class LocatingHandler {
 public:
  LocatingHandler(Json& root, const OffsetBuf& buf, const LineTable& lines,
                  std::map<std::string, int>& out)
      : dom_(root, true), buf_(buf), lines_(lines), out_(out) {}

  bool null() { return mark(), dom_.null(); }
  bool boolean(bool v) { return mark(), dom_.boolean(v); }
  bool number_integer(Json::number_integer_t v) { return mark(), dom_.number_integer(v); }
  bool number_unsigned(Json::number_unsigned_t v) { return mark(), dom_.number_unsigned(v); }
  bool number_float(Json::number_float_t v, const std::string& s) {
    return mark(), dom_.number_float(v, s);
  }
  bool string(std::string& v) { return mark(), dom_.string(v); }
  bool binary(Json::binary_t& v) { return mark(), dom_.binary(v); }

  bool start_object(std::size_t n) {
    mark();
    frames_.push_back(Frame{true, {}, -1});
    return dom_.start_object(n);
  }
  bool key(std::string& k) {
    frames_.back().key = k;
    return dom_.key(k);
  }
  bool end_object() {
    frames_.pop_back();
    return dom_.end_object();
  }
  bool start_array(std::size_t n) {
    mark();
    frames_.push_back(Frame{false, {}, -1});
    return dom_.start_array(n);
  }
  bool end_array() {
    frames_.pop_back();
    return dom_.end_array();
  }
  bool parse_error(std::size_t pos, const std::string&, const nlohmann::detail::exception& ex) {
    error_pos = pos;
    error_what = ex.what();
    return false;
  }

  std::size_t error_pos = 0;
  std::string error_what;

 private:
  struct Frame {
    bool object;
    std::string key;
    long index;  // current element of an array, -1 before the first
  };

  void mark() {
    if (!frames_.empty() && !frames_.back().object) ++frames_.back().index;
    JsonPointer ptr;
    for (const auto& f : frames_) {
      if (f.object) {
        ptr /= f.key;
      } else {
        ptr /= static_cast<std::size_t>(f.index);
      }
    }
    out_[ptr.to_string()] = lines_.token_line(buf_.consumed());
  }

  nlohmann::detail::json_sax_dom_parser<Json> dom_;
  const OffsetBuf& buf_;
  const LineTable& lines_;
  std::map<std::string, int>& out_;
  std::vector<Frame> frames_;
};

}  // namespace

JsonSource JsonSource::parse(std::string text, std::string origin) {
  JsonSource src;
  src.origin_ = std::move(origin);
  LineTable table(text);
  OffsetBuf buf(text);
  std::istream in(&buf);
  LocatingHandler handler(src.root_, buf, table, src.lines_);
  if (!Json::sax_parse(in, &handler)) {
    auto byte = handler.error_pos == 0 ? 0 : handler.error_pos - 1;
    auto [line, col] = table.locate(std::min(byte, text.empty() ? 0 : text.size() - 1));
    // nlohmann prefixes its own "[json.exception.parse_error.101] parse error at ..."
    const std::string& what = handler.error_what;
    auto colon = what.find(": ");
    auto detail = colon == std::string::npos ? what : what.substr(colon + 2);
    throw ConfigError(fmt::format("{}:{}:{}: {}", src.origin_, line, col, detail));
  }
  return src;
}

JsonSource JsonSource::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("{}: cannot open file", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

int JsonSource::line_of(const JsonPointer& ptr) const {
  auto it = lines_.find(ptr.to_string());
  return it == lines_.end() ? 0 : it->second;
}

void JsonSource::fail(const JsonPointer& ptr, const std::string& message) const {
  auto where = ptr.to_string();
  if (where.empty()) where = "/";
  int line = line_of(ptr);
  if (line > 0) throw ConfigError(fmt::format("{}:{}: {} (at {})", origin_, line, message, where));
  throw ConfigError(fmt::format("{}: {} (at {})", origin_, message, where));
}

JsonNode::JsonNode(const JsonSource& src, JsonPointer ptr) : src_(&src), ptr_(std::move(ptr)) {}

const Json& JsonNode::value() const { return src_->root().at(ptr_); }

bool JsonNode::has(std::string_view key) const {
  const auto& v = value();
  return v.is_object() && v.contains(key);
}

JsonNode JsonNode::at(std::string_view key) const {
  expect_object();
  if (!value().contains(key)) fail(fmt::format("missing required key '{}'", key));
  return JsonNode(*src_, ptr_ / std::string(key));
}

JsonNode JsonNode::at(std::size_t index) const {
  expect_array();
  if (index >= value().size()) fail(fmt::format("index {} out of range", index));
  return JsonNode(*src_, ptr_ / index);
}

std::size_t JsonNode::size() const { return value().size(); }

double JsonNode::as_double() const {
  const auto& v = value();
  if (!v.is_number()) fail("expected a number");
  return v.get<double>();
}

long long JsonNode::as_int() const {
  const auto& v = value();
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_number_float()) {
    double d = v.get<double>();
    if (d == static_cast<double>(static_cast<long long>(d))) return static_cast<long long>(d);
  }
  fail("expected an integer");
}

bool JsonNode::as_bool() const {
  const auto& v = value();
  if (!v.is_boolean()) fail("expected a boolean");
  return v.get<bool>();
}

std::string JsonNode::as_string() const {
  const auto& v = value();
  if (!v.is_string()) fail("expected a string");
  return v.get<std::string>();
}

double JsonNode::get_double(std::string_view key, double fallback) const {
  return has(key) ? at(key).as_double() : fallback;
}

long long JsonNode::get_int(std::string_view key, long long fallback) const {
  return has(key) ? at(key).as_int() : fallback;
}

std::string JsonNode::get_string(std::string_view key, const std::string& fallback) const {
  return has(key) ? at(key).as_string() : fallback;
}

const JsonNode& JsonNode::expect_object() const {
  if (!value().is_object()) fail("expected an object");
  return *this;
}

const JsonNode& JsonNode::expect_array() const {
  if (!value().is_array()) fail("expected an array");
  return *this;
}

}  // namespace smdt
