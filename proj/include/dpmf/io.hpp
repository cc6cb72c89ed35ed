#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dpmf/dataset.hpp"
#include "dpmf/factor_matrix.hpp"
#include "dpmf/hyperparams.hpp"

namespace dpmf {

namespace fs = std::filesystem;

/// Writes through a sibling temp file and renames it into place, so readers
/// never observe a truncated file.
void write_file_atomic(const fs::path& path, const std::string& contents);

std::string read_file(const fs::path& path);

// --- sparse triple files ----------------------------------------------------
// UTF-8, one `row_key<TAB>col_key<TAB>value` per line; lines starting with
// '#' and blank lines are ignored.

std::vector<Triple> parse_triples(const std::string& text, const std::string& origin = "<memory>");
std::string format_triples(const SparseMatrix& matrix);

SparseMatrix load_sparse(const fs::path& path, Namespace row_ns, Namespace col_ns);
void save_sparse(const fs::path& path, const SparseMatrix& matrix);

// --- dataset manifest -------------------------------------------------------

struct ManifestSource {
    std::string file;
    SourceKind kind = SourceKind::User;
    std::uint32_t index = 0;
};

/// JSON document:
///   { "ratings": "ratings.tsv", "scale": [lo, hi],
///     "sources": [ {"file": "...", "kind": "user"|"item", "index": n}, ... ],
///     "hyperparams": { ... optional ... } }
/// Relative paths resolve against the manifest's directory. Source order in
/// the file is the order used by source sweeps.
struct Manifest {
    fs::path base_dir;
    std::string ratings_file;
    double scale_lo = 0.0;
    double scale_hi = 1.0;
    std::vector<ManifestSource> sources;
    std::optional<std::string> hyperparams_json;
};

Manifest load_manifest(const fs::path& path);
std::string format_manifest(const Manifest& manifest);

struct LoadedData {
    RatingDataset ratings;
    /// Manifest order.
    std::vector<SourceMatrix> sources;
};

LoadedData load_dataset(const Manifest& manifest);

// --- hyperparameters --------------------------------------------------------

/// Overlays keys present in the JSON object onto `base`.
Hyperparams hyperparams_from_json(const std::string& json_text, Hyperparams base = {});
std::string hyperparams_to_json(const Hyperparams& hyper);

// --- factors ----------------------------------------------------------------
// `# k=<k>` header, then one `key<TAB>v_1<TAB>...<TAB>v_k` line per column.

std::string format_factors(const FactorMatrix& factors);
FactorMatrix parse_factors(const std::string& text, Namespace ns, const std::string& origin = "<memory>");

}  // namespace dpmf
