#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fctbn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

// Bad config, bad flags or unreadable inputs; maps to exit status 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Invocation {
  std::string command;
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;       // overrides config "seed"
  std::optional<std::filesystem::path> out;  // overrides config "out"
};

const std::vector<std::string>& commands();

// Runs one command. Progress goes to `log`, errors to `err`. Returns the exit
// status; on failure every file the run created is removed.
int dispatch(const Invocation& inv, std::ostream& log, std::ostream& err);

}  // namespace fctbn::cli
