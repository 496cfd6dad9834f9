#pragma once

#include <cmath>

namespace otafl {

// Amplitudes are kept in sqrt(mW) throughout, so |x|^2 is a power in mW and
// converts to dBm with a plain 10*log10.

inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

inline double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

inline double to_db(double linear_ratio) { return 10.0 * std::log10(linear_ratio); }

}  // namespace otafl
