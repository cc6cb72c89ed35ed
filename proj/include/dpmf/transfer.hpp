#pragma once

#include <cstdint>
#include <string>

namespace dpmf {

/// Data movement of centralized vs. distributed training.
///
/// Centralized: every source entry travels once as an 8-byte value plus an
/// 8-byte key. Distributed: every shared entity's k-vector goes down and its
/// partial gradient comes back up each iteration.
struct TransferReport {
    std::uint64_t shared_users = 0;
    std::uint64_t shared_items = 0;
    std::uint64_t k = 0;
    std::uint64_t iterations = 0;
    std::uint64_t centralized_nnz = 0;

    double centralized_bytes = 0.0;
    double per_iteration_bytes = 0.0;
    double distributed_bytes = 0.0;
    /// distributed / centralized; NaN when nothing would be centralized.
    double ratio = 0.0;
};

TransferReport transfer_report(std::uint64_t shared_users, std::uint64_t shared_items, std::uint64_t k,
                               std::uint64_t iterations, std::uint64_t centralized_nnz);

/// Value of `bytes` in the given binary unit (1 KB = 1024 B).
double in_binary_unit(double bytes, const std::string& unit);

/// e.g. "610.35 MB", choosing the largest binary unit that keeps the value >= 1.
std::string format_bytes(double bytes);

/// Ratio as a percentage with one decimal, e.g. "5.0%".
std::string format_ratio(double ratio);

/// Plain-text table.
std::string format_transfer_report(const TransferReport& report);

}  // namespace dpmf
