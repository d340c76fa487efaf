#include "dtsurv/types.hpp"

#include <functional>

namespace dtsurv {

std::string EnrollmentKey::to_string() const {
  return std::to_string(id_student) + "/" + code_module + "/" + code_presentation;
}

std::size_t EnrollmentKeyHash::operator()(const EnrollmentKey& key) const noexcept {
  std::size_t h = std::hash<std::int64_t>{}(key.id_student);
  h ^= std::hash<std::string>{}(key.code_module) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  h ^= std::hash<std::string>{}(key.code_presentation) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

std::string_view to_string(FinalResult result) {
  switch (result) {
    case FinalResult::kPass: return "Pass";
    case FinalResult::kFail: return "Fail";
    case FinalResult::kWithdrawn: return "Withdrawn";
    case FinalResult::kDistinction: return "Distinction";
  }
  return "Pass";
}

std::optional<FinalResult> parse_final_result(std::string_view text) {
  if (text == "Pass") return FinalResult::kPass;
  if (text == "Fail") return FinalResult::kFail;
  if (text == "Withdrawn") return FinalResult::kWithdrawn;
  if (text == "Distinction") return FinalResult::kDistinction;
  return std::nullopt;
}

}  // namespace dtsurv
