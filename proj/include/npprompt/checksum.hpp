#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace npprompt {

std::string sha256_hex(const std::filesystem::path& path);

/// Metadata written by the exporter next to every artifact it emits.
struct ExportManifest {
    std::string model;
    std::string kind; // vocab | embeddings | logits | contextual
    std::optional<int> layer_index;
    std::optional<std::string> template_source;
    std::optional<std::string> dataset;
    std::map<std::string, std::string> files; // path relative to the manifest -> sha256 hex
};

ExportManifest read_export_manifest(const std::filesystem::path& path);
void write_export_manifest(const std::filesystem::path& path, const ExportManifest& manifest);

/// Recomputes every listed checksum; throws ChecksumMismatch on the first
/// file that differs.
void verify_export_manifest(const std::filesystem::path& path);

} // namespace npprompt
