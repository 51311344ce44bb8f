#pragma once

#include <string>

namespace asmopt {

// Raw byte sequences; std::string carries embedded NULs fine.
using Bytes = std::string;

struct TestCase {
  Bytes input;
  Bytes expected_output;  // stdout of the reference binary on `input`

  bool operator==(const TestCase&) const = default;
};

}  // namespace asmopt
