#pragma once

#include <stdexcept>
#include <string>

namespace lrb {

class TomlError : public std::runtime_error {
public:
  TomlError(int line, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}
  int line() const { return line_; }

private:
  int line_;
};

// Parses the TOML subset used by experiment configs (tables, arrays of
// tables, dotted table names, strings, numbers, booleans, single-line arrays,
// comments) and returns the equivalent JSON text.
std::string toml_to_json(const std::string& text);

}  // namespace lrb
