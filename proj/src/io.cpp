#include "stabilyze/io.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace stabilyze {

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace {

void dump17_rec(const nlohmann::json& j, int indent, int depth, std::string& out) {
    const std::string pad(size_t(indent) * (depth + 1), ' ');
    const std::string close_pad(size_t(indent) * depth, ' ');
    switch (j.type()) {
        case nlohmann::json::value_t::number_float:
            out += fmt17(j.get<double>());
            break;
        case nlohmann::json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                break;
            }
            out += "[\n";
            for (size_t i = 0; i < j.size(); ++i) {
                out += pad;
                dump17_rec(j[i], indent, depth + 1, out);
                out += (i + 1 < j.size()) ? ",\n" : "\n";
            }
            out += close_pad + "]";
            break;
        }
        case nlohmann::json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                break;
            }
            out += "{\n";
            size_t i = 0;
            for (auto it = j.begin(); it != j.end(); ++it, ++i) {
                out += pad + nlohmann::json(it.key()).dump() + ": ";
                dump17_rec(it.value(), indent, depth + 1, out);
                out += (i + 1 < j.size()) ? ",\n" : "\n";
            }
            out += close_pad + "}";
            break;
        }
        default:
            out += j.dump();  // null, bool, integers, strings
    }
}

}  // namespace

std::string dump17(const nlohmann::json& j, int indent) {
    std::string out;
    dump17_rec(j, indent, 0, out);
    out += "\n";
    return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)v);
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw std::runtime_error("read failed on " + path);
    return s;
}

void atomic_write(const std::string& path, std::string_view content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp);
        out.write(content.data(), std::streamsize(content.size()));
        if (!out) throw std::runtime_error("write failed on " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

void write_samples(const std::string& path, const SampleSet& set,
                   const nlohmann::json& sidecar_extra) {
    static_assert(sizeof(std::complex<double>) == 16);
    std::string bytes(set.z.size() * 16, '\0');
    if (!set.z.empty()) std::memcpy(bytes.data(), set.z.data(), bytes.size());
    atomic_write(path, bytes);

    nlohmann::json side = set.metadata();
    side["ess"] = set.ess;
    side["format"] = "f64le-pairs";
    for (auto it = sidecar_extra.begin(); it != sidecar_extra.end(); ++it)
        side[it.key()] = it.value();
    atomic_write(path + ".json", dump17(side));
}

SampleSet read_samples(const std::string& path, nlohmann::json* sidecar) {
    const std::string bytes = read_file(path);
    if (bytes.size() % 16 != 0)
        throw std::runtime_error(path + ": size is not a multiple of 16 bytes");
    SampleSet set;
    set.z.resize(bytes.size() / 16);
    if (!set.z.empty()) std::memcpy(set.z.data(), bytes.data(), bytes.size());

    const auto side = nlohmann::json::parse(read_file(path + ".json"));
    set.seed = side.value("seed", std::uint64_t(0));
    set.scheme = side.value("scheme", std::string());
    set.dt_max = side.value("dt_max", 0.0);
    set.burn_in_time = side.value("burn_in_time", 0.0);
    set.sample_interval = side.value("sample_interval", 0.0);
    set.horizon = side.value("horizon", 0.0);
    set.chains = side.value("chains", 0);
    set.blowup_count = side.value("blowup_count", 0);
    set.total_steps = side.value("total_steps", 0l);
    set.ess = side.value("ess", 0.0);
    if (sidecar) *sidecar = side;
    return set;
}

nlohmann::json make_manifest(const std::string& subcommand,
                             const std::vector<std::string>& args,
                             const std::map<std::string, std::string>& input_hashes,
                             std::uint64_t seed) {
    nlohmann::json inputs = nlohmann::json::object();
    for (const auto& [path, hash] : input_hashes) inputs[path] = hash;
    const char* threads = std::getenv("STABILYZE_THREADS");
    return nlohmann::json{{"version", kVersion},
                          {"subcommand", subcommand},
                          {"args", args},
                          {"inputs", inputs},
                          {"seed", seed},
                          {"threads_cap", threads ? nlohmann::json(threads)
                                                  : nlohmann::json(nullptr)}};
}

}  // namespace stabilyze
