#pragma once

#include <stdexcept>
#include <string>

namespace varchen {

/// Non-finite or otherwise malformed numeric input.
struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A curvature pair with a numerically zero step cannot be damped or stored.
struct DegenerateStep : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Text-format parse failure with 1-based line/column location.
struct ParseError : std::runtime_error {
  ParseError(const std::string& file, int line_no, int column_no, const std::string& what_arg)
      : std::runtime_error(file + ":" + std::to_string(line_no) + ":" + std::to_string(column_no) +
                           ": " + what_arg),
        line(line_no),
        column(column_no) {}
  int line;
  int column;
};

}  // namespace varchen
