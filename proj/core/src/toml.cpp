#include "lrb/toml.hpp"

#include <cctype>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace lrb {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Removes a trailing comment that is not inside a string.
std::string_view strip_comment(std::string_view s) {
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) in_string = !in_string;
    if (s[i] == '#' && !in_string) return s.substr(0, i);
  }
  return s;
}

bool valid_bare_key(std::string_view s) {
  if (s.empty()) return false;
  for (const char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  return true;
}

std::vector<std::string> split_dotted(std::string_view path, int line) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = path.find('.', start);
    const std::string_view part = trim(path.substr(start, pos - start));
    if (!valid_bare_key(part)) throw TomlError(line, "invalid key segment in table name");
    parts.emplace_back(part);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

class ValueParser {
public:
  ValueParser(std::string_view text, int line) : s_(text), line_(line) {}

  json parse() {
    json v = parse_value();
    skip_ws();
    if (pos_ != s_.size()) throw TomlError(line_, "trailing characters after value");
    return v;
  }

private:
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  json parse_value() {
    skip_ws();
    if (pos_ >= s_.size()) throw TomlError(line_, "missing value");
    const char c = s_[pos_];
    if (c == '"') return parse_string();
    if (c == '[') return parse_array();
    return parse_scalar();
  }

  json parse_string() {
    ++pos_;  // opening quote
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      char c = s_[pos_++];
      if (c == '\\') {
        if (pos_ >= s_.size()) throw TomlError(line_, "dangling escape in string");
        const char esc = s_[pos_++];
        switch (esc) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case 'r': c = '\r'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: throw TomlError(line_, "unsupported escape in string");
        }
      }
      out += c;
    }
    if (pos_ >= s_.size()) throw TomlError(line_, "unterminated string");
    ++pos_;  // closing quote
    return json(out);
  }

  json parse_array() {
    ++pos_;  // '['
    json arr = json::array();
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == ']') {
      ++pos_;
      return arr;
    }
    while (true) {
      arr.push_back(parse_value());
      skip_ws();
      if (pos_ >= s_.size()) throw TomlError(line_, "unterminated array");
      if (s_[pos_] == ']') {
        ++pos_;
        return arr;
      }
      if (s_[pos_] != ',') throw TomlError(line_, "expected ',' or ']' in array");
      ++pos_;
    }
  }

  json parse_scalar() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' &&
           !std::isspace(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
    const std::string tok(s_.substr(start, pos_ - start));
    if (tok == "true") return json(true);
    if (tok == "false") return json(false);

    const bool has_float_marks = tok.find_first_of(".eE") != std::string::npos &&
                                 tok.find("0x") != 0;
    try {
      std::size_t used = 0;
      if (!has_float_marks) {
        if (!tok.empty() && tok[0] == '-') {
          const long long v = std::stoll(tok, &used);
          if (used == tok.size()) return json(v);
        } else {
          const unsigned long long v = std::stoull(tok, &used);
          if (used == tok.size()) return json(v);
        }
      }
      used = 0;
      const double d = std::stod(tok, &used);
      if (used == tok.size()) return json(d);
    } catch (const std::exception&) {
      // fall through to the error below
    }
    throw TomlError(line_, "cannot parse value '" + tok + "'");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  int line_;
};

// Walks a dotted path from the root, descending into the last element of any
// array-of-tables met along the way.
json* walk(json& root, const std::vector<std::string>& parts, int line) {
  json* node = &root;
  for (const std::string& part : parts) {
    if (node->is_array()) {
      if (node->empty()) throw TomlError(line, "cannot extend empty table array");
      node = &node->back();
    }
    if (!node->is_object()) throw TomlError(line, "key '" + part + "' is not a table");
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
  }
  if (node->is_array()) {
    if (node->empty()) throw TomlError(line, "cannot extend empty table array");
    node = &node->back();
  }
  return node;
}

}  // namespace

std::string toml_to_json(const std::string& text) {
  json root = json::object();
  json* context = &root;

  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t eol = text.find('\n', start);
    const std::string_view raw(text.data() + start,
                               (eol == std::string::npos ? text.size() : eol) - start);
    start = eol == std::string::npos ? text.size() + 1 : eol + 1;
    ++line_no;

    const std::string_view line = trim(strip_comment(raw));
    if (line.empty()) continue;

    if (line.front() == '[') {
      const bool table_array = line.size() > 1 && line[1] == '[';
      const std::string_view closer = table_array ? "]]" : "]";
      const std::size_t close = line.rfind(closer);
      if (close == std::string_view::npos || close + closer.size() != line.size())
        throw TomlError(line_no, "malformed table header");
      const std::string_view name = trim(line.substr(table_array ? 2 : 1, close - (table_array ? 2 : 1)));
      std::vector<std::string> parts = split_dotted(name, line_no);

      if (table_array) {
        const std::string leaf = parts.back();
        parts.pop_back();
        json* parent = walk(root, parts, line_no);
        json& arr = (*parent)[leaf];
        if (arr.is_null()) arr = json::array();
        if (!arr.is_array()) throw TomlError(line_no, "'" + leaf + "' is not a table array");
        arr.push_back(json::object());
        context = &arr.back();
      } else {
        context = walk(root, parts, line_no);
      }
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw TomlError(line_no, "expected 'key = value'");
    std::string_view key = trim(line.substr(0, eq));
    if (key.size() >= 2 && key.front() == '"' && key.back() == '"')
      key = key.substr(1, key.size() - 2);
    if (!valid_bare_key(key)) throw TomlError(line_no, "invalid key");
    if (context->contains(std::string(key)))
      throw TomlError(line_no, "duplicate key '" + std::string(key) + "'");
    (*context)[std::string(key)] = ValueParser(trim(line.substr(eq + 1)), line_no).parse();
  }
  return root.dump();
}

}  // namespace lrb
