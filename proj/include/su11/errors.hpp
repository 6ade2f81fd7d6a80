#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace su11 {

/// A parameter or configuration violates a documented precondition.
/// Carries every problem found, not just the first.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what)
      : std::invalid_argument(what), problems_{what} {}

  explicit ValidationError(std::vector<std::string> problems)
      : std::invalid_argument(join(problems)), problems_(std::move(problems)) {}

  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) {
      if (!out.empty()) out += "; ";
      out += s;
    }
    return out;
  }

  std::vector<std::string> problems_;
};

/// An integration left the finite range. The run seed is kept for replay.
class NumericalAbort : public std::runtime_error {
 public:
  NumericalAbort(const std::string& what, std::uint64_t seed, double time)
      : std::runtime_error(what + " (seed " + std::to_string(seed) + ", t=" +
                           std::to_string(time) + ")"),
        seed_(seed),
        time_(time) {}

  std::uint64_t seed() const noexcept { return seed_; }
  double time() const noexcept { return time_; }

 private:
  std::uint64_t seed_;
  double time_;
};

inline void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

}  // namespace su11
