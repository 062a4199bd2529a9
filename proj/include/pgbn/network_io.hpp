#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pgbn/model.hpp"

namespace pgbn {

inline constexpr int kNetworkFormatVersion = 1;

// Text format, one record per line:
//
//   pgbn-network 1
//   # config: <free text>          (zero or more, echoed run configuration)
//   depth T
//   widths n K0 .. KT
//   phi_kind last_sample|posterior_mean
//   gamma0 g / c0 c / a0 .. / b0 .. / e0 .. / f0 ..
//   eta n values / b_iters n values / c_iters n values
//   k1_max n / t_max n
//   r n values
//   c_median n values
//   usage t n values               (one per layer)
//   phi t rows cols                (followed by `cols` lines, one column each)
//   end
//
// Reals use the shortest representation that round-trips. Unknown keys are
// skipped and reported through `warnings`.
void write_network(std::ostream& out, const Network& net,
                   const std::vector<std::string>& config = {});
Network read_network(std::istream& in, std::vector<std::string>* warnings = nullptr);

void save_network(const std::filesystem::path& path, const Network& net,
                  const std::vector<std::string>& config = {});
Network load_network(const std::filesystem::path& path,
                     std::vector<std::string>* warnings = nullptr);

std::string format_real(double v);

}  // namespace pgbn
