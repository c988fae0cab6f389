#pragma once

namespace fnls {

inline constexpr const char* kVersion = "0.1.0";

// Major version of every emitted file format (manifest, summary, plotdata,
// CSV header) and of the config schema.  Readers refuse newer majors.
inline constexpr int kFormatVersion = 1;

}  // namespace fnls
