#include <chrono>
#include <cstdint>
#include <ctime>
#include <fstream>

#include "ibstress/errors.hpp"
#include "ibstress/io.hpp"
#include "ibstress/version.hpp"

namespace ibstress {

std::string file_digest_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for digest: " + path);
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            hash ^= static_cast<unsigned char>(buf[i]);
            hash *= 0x100000001b3ULL;
        }
    }
    char hex[17];
    static const char* digits = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        hex[i] = digits[hash & 0xF];
        hash >>= 4;
    }
    hex[16] = '\0';
    return std::string(hex);
}

std::string utc_timestamp_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

nlohmann::ordered_json Manifest::to_json() const {
    nlohmann::ordered_json j;
    j["schema"] = "ibstress-manifest/1";
    j["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
    j["command"] = command;
    j["config"] = config;
    auto files = [](const std::vector<std::pair<std::string, std::string>>& v) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& [path, digest] : v)
            arr.push_back({{"path", path}, {"fnv1a64", digest}});
        return arr;
    };
    j["inputs"] = files(inputs);
    j["outputs"] = files(outputs);
    j["created_utc"] = created_utc;
    return j;
}

Manifest Manifest::from_json(const nlohmann::json& j) {
    if (j.value("schema", "") != "ibstress-manifest/1")
        throw ValidationError("unrecognized manifest schema");
    Manifest m;
    m.command = j.at("command").get<std::string>();
    m.config = j.at("config");
    auto files = [](const nlohmann::json& arr) {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& e : arr)
            out.emplace_back(e.at("path").get<std::string>(), e.at("fnv1a64").get<std::string>());
        return out;
    };
    m.inputs = files(j.at("inputs"));
    m.outputs = files(j.at("outputs"));
    m.created_utc = j.value("created_utc", "");
    return m;
}

void Manifest::write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << to_json().dump(2) << "\n";
    if (!out) throw IoError("write failed: " + path);
}

Manifest Manifest::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path + ": " + e.what());
    }
    return from_json(j);
}

}  // namespace ibstress
