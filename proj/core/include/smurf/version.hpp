#ifndef SMURF_VERSION_HPP
#define SMURF_VERSION_HPP

namespace smurf {

inline constexpr const char* version_string = "0.1.0";

}  // namespace smurf

#endif
