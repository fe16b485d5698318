#pragma once

#include <stdexcept>
#include <string>

namespace anderson {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MalformedPairing : Error { using Error::Error; };
struct NotFull : Error { using Error::Error; };
struct InvalidForest : Error { using Error::Error; };
struct BudgetExceeded : Error { using Error::Error; };
struct OutOfRadius : Error { using Error::Error; };
struct DegenerateConfiguration : Error { using Error::Error; };
struct SingularPoint : Error { using Error::Error; };
struct PreconditionViolated : Error { using Error::Error; };
struct EmptySector : Error { using Error::Error; };
struct SectorNotFound : Error { using Error::Error; };

}  // namespace anderson
