// Binary kernel-bundle container.
//
// Layout (all integers u32, all reals f64, little-endian):
//   "BMKL" | version | P | N | N_test
//   P times: name_len | name bytes | N*N train (row-major)
//            | N_test*N cross (row-major) | N_test self-similarities
#ifndef BEMKL_BUNDLE_IO_HPP
#define BEMKL_BUNDLE_IO_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "bemkl/kernels.hpp"

namespace bemkl {

inline constexpr std::uint32_t kBundleVersion = 1;

void write_bundle(std::ostream& out, const KernelBundle& bundle);
KernelBundle read_bundle(std::istream& in);

/// Throws std::invalid_argument for an empty bank and FormatError on I/O failure.
void save_bundle(const KernelBundle& bundle, const std::filesystem::path& path);
KernelBundle load_bundle(const std::filesystem::path& path);

}  // namespace bemkl

#endif  // BEMKL_BUNDLE_IO_HPP
