#pragma once

#include <stdexcept>
#include <string>

namespace vimm {

// All recoverable failures (bad files, infeasible parameters, shape
// mismatches) are reported through this type.
class error : public std::runtime_error {
 public:
  explicit error(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw error(what);
}

}  // namespace vimm
