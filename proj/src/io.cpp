#include "dpmf/io.hpp"

#include <fstream>
#include <sstream>
#include <string_view>

#include <json.hpp>

#include "dpmf/errors.hpp"
#include "dpmf/format.hpp"

namespace dpmf {

namespace {

using json = nlohmann::json;

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        auto tab = line.find('\t', start);
        if (tab == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

template <typename Fn>
void for_each_line(const std::string& text, Fn&& fn) {
    std::size_t start = 0;
    std::size_t line_no = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string::npos) {
            end = text.size();
        }
        std::string_view line(text.data() + start, end - start);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        ++line_no;
        fn(line, line_no);
        start = end + 1;
    }
}

SourceWeights weights_from_json(const json& j, SourceWeights base) {
    if (j.contains("lambda_data")) base.lambda_data = j.at("lambda_data").get<double>();
    if (j.contains("lambda_latent")) base.lambda_latent = j.at("lambda_latent").get<double>();
    return base;
}

json weights_to_json(const SourceWeights& w) {
    return json{{"lambda_data", w.lambda_data}, {"lambda_latent", w.lambda_latent}};
}

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& contents) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot write " + tmp.string());
        }
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) {
            throw IoError("failed writing " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<Triple> parse_triples(const std::string& text, const std::string& origin) {
    std::vector<Triple> triples;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        if (line.empty() || line.front() == '#') {
            return;
        }
        auto fields = split_tabs(line);
        if (fields.size() != 3) {
            throw InvalidArgument(origin + ":" + std::to_string(line_no) + ": expected 3 tab-separated fields, got " +
                                  std::to_string(fields.size()));
        }
        double value;
        try {
            value = parse_double(fields[2]);
        } catch (const InvalidArgument& e) {
            throw InvalidArgument(origin + ":" + std::to_string(line_no) + ": " + e.what());
        }
        triples.push_back(Triple{std::string(fields[0]), std::string(fields[1]), value});
    });
    return triples;
}

std::string format_triples(const SparseMatrix& matrix) {
    std::string out;
    for (const Entry& e : matrix.entries()) {
        out += matrix.row_labels()[e.row].key;
        out += '\t';
        out += matrix.col_labels()[e.col].key;
        out += '\t';
        out += format_double(e.value);
        out += '\n';
    }
    return out;
}

SparseMatrix load_sparse(const fs::path& path, Namespace row_ns, Namespace col_ns) {
    auto triples = parse_triples(read_file(path), path.string());
    return build_sparse(triples, row_ns, col_ns);
}

void save_sparse(const fs::path& path, const SparseMatrix& matrix) {
    write_file_atomic(path, format_triples(matrix));
}

Manifest load_manifest(const fs::path& path) {
    if (!fs::exists(path)) {
        throw IoError("manifest not found: " + path.string());
    }
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw InvalidArgument("cannot parse manifest " + path.string() + ": " + e.what());
    }
    Manifest m;
    m.base_dir = path.parent_path();
    try {
        m.ratings_file = doc.at("ratings").get<std::string>();
        const auto& scale = doc.at("scale");
        if (!scale.is_array() || scale.size() != 2) {
            throw InvalidArgument("manifest 'scale' must be a two-element array");
        }
        m.scale_lo = scale[0].get<double>();
        m.scale_hi = scale[1].get<double>();
        if (doc.contains("sources")) {
            for (const auto& s : doc.at("sources")) {
                ManifestSource src;
                src.file = s.at("file").get<std::string>();
                const auto kind = s.at("kind").get<std::string>();
                if (kind == "user") {
                    src.kind = SourceKind::User;
                } else if (kind == "item") {
                    src.kind = SourceKind::Item;
                } else {
                    throw InvalidArgument("source kind must be 'user' or 'item', got '" + kind + "'");
                }
                src.index = s.at("index").get<std::uint32_t>();
                m.sources.push_back(std::move(src));
            }
        }
        if (doc.contains("hyperparams")) {
            m.hyperparams_json = doc.at("hyperparams").dump();
        }
    } catch (const json::exception& e) {
        throw InvalidArgument("invalid manifest " + path.string() + ": " + e.what());
    }
    return m;
}

std::string format_manifest(const Manifest& m) {
    json doc;
    doc["ratings"] = m.ratings_file;
    doc["scale"] = {m.scale_lo, m.scale_hi};
    doc["sources"] = json::array();
    for (const auto& s : m.sources) {
        doc["sources"].push_back({{"file", s.file}, {"kind", std::string(to_string(s.kind))}, {"index", s.index}});
    }
    if (m.hyperparams_json) {
        doc["hyperparams"] = json::parse(*m.hyperparams_json);
    }
    return doc.dump(2) + "\n";
}

LoadedData load_dataset(const Manifest& m) {
    auto resolve = [&](const std::string& file) {
        fs::path p(file);
        return p.is_absolute() ? p : m.base_dir / p;
    };
    auto require = [](const fs::path& p) {
        if (!fs::exists(p)) {
            throw IoError("file not found: " + p.string());
        }
    };
    LoadedData out;
    const fs::path ratings_path = resolve(m.ratings_file);
    require(ratings_path);
    out.ratings = RatingDataset{load_sparse(ratings_path, Namespace::user(), Namespace::item()), m.scale_lo, m.scale_hi};
    out.ratings.validate();
    for (const auto& s : m.sources) {
        const fs::path p = resolve(s.file);
        require(p);
        SourceMatrix src;
        src.kind = s.kind;
        src.index = s.index;
        src.data = load_sparse(p, src.entity_namespace(), src.attribute_namespace());
        out.sources.push_back(std::move(src));
    }
    return out;
}

Hyperparams hyperparams_from_json(const std::string& json_text, Hyperparams h) {
    json j;
    try {
        j = json::parse(json_text);
        if (j.contains("k")) h.k = j.at("k").get<std::size_t>();
        if (j.contains("alpha")) h.alpha = j.at("alpha").get<double>();
        if (j.contains("epsilon")) h.epsilon = j.at("epsilon").get<double>();
        if (j.contains("max_iters")) h.max_iters = j.at("max_iters").get<std::size_t>();
        if (j.contains("lambda_U")) h.lambda_U = j.at("lambda_U").get<double>();
        if (j.contains("lambda_V")) h.lambda_V = j.at("lambda_V").get<double>();
        if (j.contains("seed")) h.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("init_scale")) h.init_scale = j.at("init_scale").get<double>();
        if (j.contains("user_source")) h.user_source_default = weights_from_json(j.at("user_source"), h.user_source_default);
        if (j.contains("item_source")) h.item_source_default = weights_from_json(j.at("item_source"), h.item_source_default);
        if (j.contains("user_source_overrides")) {
            for (const auto& [key, value] : j.at("user_source_overrides").items()) {
                const auto n = static_cast<std::uint32_t>(parse_uint(key));
                h.user_source_overrides[n] = weights_from_json(value, h.user_source(n));
            }
        }
        if (j.contains("item_source_overrides")) {
            for (const auto& [key, value] : j.at("item_source_overrides").items()) {
                const auto m = static_cast<std::uint32_t>(parse_uint(key));
                h.item_source_overrides[m] = weights_from_json(value, h.item_source(m));
            }
        }
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("invalid hyperparameters: ") + e.what());
    }
    return h;
}

std::string hyperparams_to_json(const Hyperparams& h) {
    json j{
        {"k", h.k},
        {"alpha", h.alpha},
        {"epsilon", h.epsilon},
        {"max_iters", h.max_iters},
        {"lambda_U", h.lambda_U},
        {"lambda_V", h.lambda_V},
        {"seed", h.seed},
        {"init_scale", h.init_scale},
        {"user_source", weights_to_json(h.user_source_default)},
        {"item_source", weights_to_json(h.item_source_default)},
    };
    json users = json::object();
    for (const auto& [n, w] : h.user_source_overrides) {
        users[std::to_string(n)] = weights_to_json(w);
    }
    json items = json::object();
    for (const auto& [m, w] : h.item_source_overrides) {
        items[std::to_string(m)] = weights_to_json(w);
    }
    j["user_source_overrides"] = users;
    j["item_source_overrides"] = items;
    return j.dump(2);
}

std::string format_factors(const FactorMatrix& factors) {
    std::string out = "# k=" + std::to_string(factors.k()) + "\n";
    for (std::size_t c = 0; c < factors.n_cols(); ++c) {
        out += factors.labels()[c].key;
        for (double v : factors.col(c)) {
            out += '\t';
            out += format_double(v);
        }
        out += '\n';
    }
    return out;
}

FactorMatrix parse_factors(const std::string& text, Namespace ns, const std::string& origin) {
    std::optional<std::size_t> k;
    std::vector<EntityId> labels;
    std::vector<double> values;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        if (line.empty()) {
            return;
        }
        if (line.front() == '#') {
            if (line.starts_with("# k=")) {
                k = parse_uint(line.substr(4));
            }
            return;
        }
        auto fields = split_tabs(line);
        if (!k) {
            k = fields.size() - 1;
        }
        if (fields.size() != *k + 1) {
            throw InvalidArgument(origin + ":" + std::to_string(line_no) + ": expected " + std::to_string(*k + 1) +
                                  " fields");
        }
        labels.push_back(EntityId{ns, std::string(fields[0])});
        for (std::size_t d = 1; d < fields.size(); ++d) {
            values.push_back(parse_double(fields[d]));
        }
    });
    return FactorMatrix(k.value_or(0), std::make_shared<LabelIndex>(std::move(labels)), std::move(values));
}

}  // namespace dpmf
