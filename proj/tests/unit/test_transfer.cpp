#include <doctest.h>

#include <cmath>

#include "dpmf/transfer.hpp"

using namespace dpmf;

TEST_CASE("centralized transfer of 80e9 ratings") {
    auto r = transfer_report(0, 0, 10, 100, 80'000'000'000ULL);
    CHECK(r.centralized_bytes == 1.28e12);
    CHECK(in_binary_unit(r.centralized_bytes, "TB") == doctest::Approx(1.1642).epsilon(1e-4));
    CHECK(format_bytes(r.centralized_bytes) == "1.16 TB");
}

TEST_CASE("per-iteration transfer for 4e6 shared users at k=10") {
    auto r = transfer_report(4'000'000, 0, 10, 100, 80'000'000'000ULL);
    CHECK(r.per_iteration_bytes == 6.4e8);
    CHECK(in_binary_unit(r.per_iteration_bytes, "MB") == doctest::Approx(610.35).epsilon(1e-5));
    CHECK(format_bytes(r.per_iteration_bytes) == "610.35 MB");
}

TEST_CASE("total over 100 iterations and the ratio") {
    auto r = transfer_report(4'000'000, 0, 10, 100, 80'000'000'000ULL);
    CHECK(r.distributed_bytes == 6.4e10);
    CHECK(in_binary_unit(r.distributed_bytes, "GB") == doctest::Approx(59.6046).epsilon(1e-5));
    CHECK(r.ratio == doctest::Approx(0.05));
    CHECK(format_ratio(r.ratio) == "5.0%");
}

TEST_CASE("zero iterations transfer nothing") {
    auto r = transfer_report(4'000'000, 10, 10, 0, 1000);
    CHECK(r.per_iteration_bytes > 0.0);
    CHECK(r.distributed_bytes == 0.0);
    CHECK(format_ratio(r.ratio) == "0.0%");
}

TEST_CASE("items count like users") {
    auto a = transfer_report(3, 5, 4, 2, 100);
    CHECK(a.per_iteration_bytes == 8 * 4 * 8 * 2);
    CHECK(a.distributed_bytes == 2 * 8 * 4 * 8 * 2);
}

TEST_CASE("ratio formatting") {
    CHECK(format_ratio(0.0512) == "5.1%");
    CHECK(format_ratio(1.0) == "100.0%");
    CHECK(format_ratio(std::nan("")) == "n/a");
    CHECK(std::isnan(transfer_report(1, 1, 1, 1, 0).ratio));
}

TEST_CASE("byte formatting picks binary units") {
    CHECK(format_bytes(0) == "0 B");
    CHECK(format_bytes(1023) == "1023 B");
    CHECK(format_bytes(1024) == "1.00 KB");
    CHECK(format_bytes(1536) == "1.50 KB");
    CHECK(format_bytes(1024.0 * 1024 * 1024) == "1.00 GB");
}

TEST_CASE("report table mentions every figure") {
    auto text = format_transfer_report(transfer_report(4'000'000, 0, 10, 100, 80'000'000'000ULL));
    CHECK(text.find("1.16 TB") != std::string::npos);
    CHECK(text.find("610.35 MB") != std::string::npos);
    CHECK(text.find("59.60 GB") != std::string::npos);
    CHECK(text.find("5.0%") != std::string::npos);
}
