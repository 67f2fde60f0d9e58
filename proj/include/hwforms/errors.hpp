#pragma once

#include <stdexcept>
#include <string>

namespace hwforms {

/// Malformed input file; carries the 1-based line number.
struct parse_error : std::runtime_error {
    int line;
    parse_error(const std::string& what, int line_no)
        : std::runtime_error("line " + std::to_string(line_no) + ": " + what), line(line_no) {}
};

/// A state with det(Theta) <= 0 on some element; the Newton line search
/// catches this and halves the step.
struct inadmissible_state : std::runtime_error {
    int element;
    explicit inadmissible_state(int elem)
        : std::runtime_error("inadmissible state: nonpositive jacobian on element " +
                             std::to_string(elem)),
          element(elem) {}
};

/// Newton failed to reach the requested tolerance within max_iter.
struct nonconvergence_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace hwforms
