#ifndef CLAB_ERRORS_HPP
#define CLAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace clab {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct RankDeficient : Error { using Error::Error; };
struct Singular : Error { using Error::Error; };
struct NotHermitian : Error { using Error::Error; };
struct BadOrder : Error { using Error::Error; };
struct OddDimension : Error { using Error::Error; };
struct ChartDegenerate : Error { using Error::Error; };
struct DBlockSingular : Error { using Error::Error; };
struct SingularHopping : Error { using Error::Error; };
struct ResampleLimit : Error { using Error::Error; };
struct WindowMismatch : Error { using Error::Error; };
struct NotChiral : Error { using Error::Error; };
struct NearSingular : Error { using Error::Error; };
struct ParityError : Error { using Error::Error; };
struct TooFewSamples : Error { using Error::Error; };
struct InsufficientSteps : Error { using Error::Error; };
struct EigenfailureAtFermi : Error { using Error::Error; };
struct DegenerateFit : Error { using Error::Error; };
struct ConfigInvalid : Error { using Error::Error; };

}  // namespace clab

#endif
