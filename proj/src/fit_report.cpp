#include "nlsysid/fit_report.hpp"

namespace nlsysid {

std::string to_string(FitStatus status) {
    switch (status) {
        case FitStatus::ok: return "ok";
        case FitStatus::gram_singular_returned_zero: return "gram_singular_returned_zero";
        case FitStatus::truncated_returned_zero: return "truncated_returned_zero";
        case FitStatus::diverged: return "diverged";
    }
    return "unknown";
}

}  // namespace nlsysid
