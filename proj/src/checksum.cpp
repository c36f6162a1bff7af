#include "npprompt/checksum.hpp"

#include <array>
#include <fstream>
#include <memory>

#include <json.hpp>
#include <openssl/evp.h>

#include "npprompt/error.hpp"

namespace npprompt {

std::string sha256_hex(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open " + path.string());
    }
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);

    static constexpr char kHex[] = "0123456789abcdef";
    std::string hex;
    hex.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        hex.push_back(kHex[digest[i] >> 4]);
        hex.push_back(kHex[digest[i] & 0xF]);
    }
    return hex;
}

ExportManifest read_export_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open " + path.string());
    }
    try {
        const auto j = nlohmann::json::parse(in);
        ExportManifest m;
        m.model = j.at("model").get<std::string>();
        m.kind = j.at("kind").get<std::string>();
        if (j.contains("layer_index")) m.layer_index = j.at("layer_index").get<int>();
        if (j.contains("template")) m.template_source = j.at("template").get<std::string>();
        if (j.contains("dataset")) m.dataset = j.at("dataset").get<std::string>();
        m.files = j.at("files").get<std::map<std::string, std::string>>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedHeader, path.string() + ": " + e.what());
    }
}

void write_export_manifest(const std::filesystem::path& path, const ExportManifest& m) {
    nlohmann::ordered_json j;
    j["model"] = m.model;
    j["kind"] = m.kind;
    if (m.layer_index) j["layer_index"] = *m.layer_index;
    if (m.template_source) j["template"] = *m.template_source;
    if (m.dataset) j["dataset"] = *m.dataset;
    j["files"] = m.files;
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorCode::Io, "cannot write " + path.string());
    }
    out << j.dump(2) << '\n';
}

void verify_export_manifest(const std::filesystem::path& path) {
    const auto manifest = read_export_manifest(path);
    const auto base = path.parent_path();
    for (const auto& [name, expected] : manifest.files) {
        const auto actual = sha256_hex(base / name);
        if (actual != expected) {
            throw Error(ErrorCode::ChecksumMismatch,
                        (base / name).string() + " does not match " + path.string());
        }
    }
}

} // namespace npprompt
