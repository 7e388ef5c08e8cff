#ifndef UCN_CLI_HPP
#define UCN_CLI_HPP

namespace ucn {

// Full command-line surface: train | eval | predict | gradcheck | pr-curve.
// Returns the process exit code: 0 success, 1 usage/config error,
// 2 numerical abort during training.
int run_cli(int argc, char** argv);

}  // namespace ucn

#endif  // UCN_CLI_HPP
