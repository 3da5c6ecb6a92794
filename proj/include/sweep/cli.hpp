#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sweep {

enum ExitCode { kExitOk = 0, kExitNumeric = 1, kExitUsage = 2 };

struct RunConfig {
  std::string subcommand;
  std::string spec;
  std::string reference;
  std::string solution;
  int k = 100;
  std::string epsilon = "0";  // 0 selects the default, "inf" disables localization
  std::optional<double> tol;
  std::string out = ".";
  unsigned seed = 0;
  std::string mode = "discrete";  // check-kkt
  double lambda = 1.0;
  std::string example_case = "all";
  std::vector<int> ks{50, 100, 200, 400};
  std::string gradient = "adjoint";
  int grid = 2001;
};

class UsageError : public std::exception {
 public:
  UsageError(std::string msg, int code = kExitUsage) : msg_(std::move(msg)), code_(code) {}
  const char* what() const noexcept override { return msg_.c_str(); }
  int code() const { return code_; }  // 0 for --help

 private:
  std::string msg_;
  int code_;
};

RunConfig parse_args(const std::vector<std::string>& args);

int run(const RunConfig& config, std::ostream& out, std::ostream& err);

// Parses, runs and maps every failure to an exit code.
int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace sweep
