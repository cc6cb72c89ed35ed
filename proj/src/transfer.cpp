#include "dpmf/transfer.hpp"

#include <array>
#include <cmath>
#include <cstdio>

#include "dpmf/distributed.hpp"
#include "dpmf/errors.hpp"

namespace dpmf {

namespace {

constexpr std::array<const char*, 5> kUnits = {"B", "KB", "MB", "GB", "TB"};

}  // namespace

TransferReport transfer_report(std::uint64_t shared_users, std::uint64_t shared_items, std::uint64_t k,
                               std::uint64_t iterations, std::uint64_t centralized_nnz) {
    constexpr double real = GradientMessage::kBytesPerReal;
    constexpr double key = GradientMessage::kBytesPerKey;

    TransferReport r{shared_users, shared_items, k, iterations, centralized_nnz};
    r.centralized_bytes = static_cast<double>(centralized_nnz) * (real + key);
    // one round trip per shared entity: latent vector down, partial gradient up
    r.per_iteration_bytes = static_cast<double>(shared_users + shared_items) * static_cast<double>(k) * real * 2.0;
    r.distributed_bytes = r.per_iteration_bytes * static_cast<double>(iterations);
    r.ratio = r.centralized_bytes > 0.0 ? r.distributed_bytes / r.centralized_bytes : std::nan("");
    return r;
}

double in_binary_unit(double bytes, const std::string& unit) {
    double scale = 1.0;
    for (const char* u : kUnits) {
        if (unit == u) {
            return bytes / scale;
        }
        scale *= 1024.0;
    }
    throw InvalidArgument("unknown unit '" + unit + "'");
}

std::string format_bytes(double bytes) {
    std::size_t unit = 0;
    double value = bytes;
    while (unit + 1 < kUnits.size() && value >= 1024.0) {
        value /= 1024.0;
        ++unit;
    }
    char buf[64];
    if (unit == 0) {
        std::snprintf(buf, sizeof(buf), "%.0f B", value);
    } else {
        std::snprintf(buf, sizeof(buf), "%.2f %s", value, kUnits[unit]);
    }
    return buf;
}

std::string format_ratio(double ratio) {
    if (std::isnan(ratio)) {
        return "n/a";
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f%%", ratio * 100.0);
    return buf;
}

std::string format_transfer_report(const TransferReport& r) {
    char buf[512];
    std::string out;
    std::snprintf(buf, sizeof(buf), "%-28s %s\n", "shared users", std::to_string(r.shared_users).c_str());
    out += buf;
    std::snprintf(buf, sizeof(buf), "%-28s %s\n", "shared items", std::to_string(r.shared_items).c_str());
    out += buf;
    std::snprintf(buf, sizeof(buf), "%-28s %s\n", "latent dimensions", std::to_string(r.k).c_str());
    out += buf;
    std::snprintf(buf, sizeof(buf), "%-28s %s\n", "iterations", std::to_string(r.iterations).c_str());
    out += buf;
    std::snprintf(buf, sizeof(buf), "%-28s %s\n", "centralized entries", std::to_string(r.centralized_nnz).c_str());
    out += buf;
    std::snprintf(buf, sizeof(buf), "%-28s %-14s (%.0f B)\n", "centralized transfer",
                  format_bytes(r.centralized_bytes).c_str(), r.centralized_bytes);
    out += buf;
    std::snprintf(buf, sizeof(buf), "%-28s %-14s (%.0f B)\n", "distributed per iteration",
                  format_bytes(r.per_iteration_bytes).c_str(), r.per_iteration_bytes);
    out += buf;
    std::snprintf(buf, sizeof(buf), "%-28s %-14s (%.0f B)\n", "distributed total", format_bytes(r.distributed_bytes).c_str(),
                  r.distributed_bytes);
    out += buf;
    std::snprintf(buf, sizeof(buf), "%-28s %s\n", "distributed / centralized", format_ratio(r.ratio).c_str());
    out += buf;
    return out;
}

}  // namespace dpmf
