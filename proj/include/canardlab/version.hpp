#ifndef CANARDLAB_VERSION_HPP
#define CANARDLAB_VERSION_HPP

namespace canardlab {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kReportSchemaVersion = 1;

}  // namespace canardlab

#endif
