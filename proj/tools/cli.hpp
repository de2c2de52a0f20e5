#pragma once

#include <iosfwd>

namespace nfc::cli {

enum ExitCode { kOk = 0, kConfigError = 2, kNumericalError = 3 };

int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

}  // namespace nfc::cli
