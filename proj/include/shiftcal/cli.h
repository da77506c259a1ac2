#ifndef SHIFTCAL_CLI_H_
#define SHIFTCAL_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace shiftcal {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

// Runs one command line (args[0] is the program name). Results go to `out`;
// failures print one diagnostic line to `err` and return 1 (bad input) or 2
// (file I/O).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace shiftcal

#endif  // SHIFTCAL_CLI_H_
