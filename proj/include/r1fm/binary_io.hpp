#pragma once

#include <filesystem>

#include "r1fm/model.hpp"

namespace r1fm {

// Flat little-endian layout shared by both files:
//
//   char[4] "R1FM" | u32 version | u64 m | u64 n | u64 seed | f64 payload[m*n]
//
// Ensembles store the m x n sensing matrix row-major. Measurement files use
// n = 1 and store y; the seed field carries the producing ensemble's seed.
inline constexpr std::uint32_t kBinaryFormatVersion = 1;

void save_ensemble(const SensingEnsemble& ens, const std::filesystem::path& path);
SensingEnsemble load_ensemble(const std::filesystem::path& path);

void save_measurements(const MeasurementSet& meas, const SensingEnsemble& ens,
                       const std::filesystem::path& path);

/// Rebinds the loaded values to `ens`; throws InvalidInput if the stored
/// count or seed does not match it.
MeasurementSet load_measurements(const std::filesystem::path& path, const SensingEnsemble& ens);

}  // namespace r1fm
