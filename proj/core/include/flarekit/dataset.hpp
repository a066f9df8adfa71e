#pragma once

#include "flarekit/synthesis.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flarekit {

inline constexpr const char* kExposureSidecar = "exposures.txt";

/// One bracket group on disk, before any pixels are read.
struct BracketGroup {
    std::string id;                      ///< subdirectory name
    std::filesystem::path normal;
    std::filesystem::path low;
    std::optional<double> normal_ev;     ///< only with an exposure sidecar
    std::optional<double> low_ev;
    std::vector<std::filesystem::path> shots;  ///< darkest first
};

struct ScanWarning {
    std::string group;
    std::string message;
};

struct ScanResult {
    std::vector<BracketGroup> groups;    ///< sorted by id
    std::vector<ScanWarning> warnings;
};

/// Scans root/<group_id>/<shot>.{png,pfm}. Shots are ordered by file name
/// (darkest first, brightest last) unless the group holds an exposures.txt
/// with "<file> <ev>" lines, which then decides the order. The shot at index
/// size/2 becomes the normal exposure and index 0 the low one. Groups of the
/// wrong size are skipped with a warning; a selected shot that cannot be
/// opened raises IoError.
ScanResult scan_bracket_groups(const std::filesystem::path& root, std::size_t group_size = 5);

/// Loads both exposures. PNG files are tagged Encoded(png_gamma).
BracketPair load_bracket_pair(const BracketGroup& group, double png_gamma = kNominalGamma);

// --- manifest -----------------------------------------------------------------

struct ManifestFile {
    std::string role;    ///< e.g. "corrupted"
    std::string path;    ///< relative to the manifest's directory
    std::uint32_t crc32 = 0;

    friend bool operator==(const ManifestFile&, const ManifestFile&) = default;
};

struct ManifestRecord {
    std::string id;
    std::string source;  ///< bracket group the record came from
    std::string split;   ///< "train" or "test"
    std::vector<std::uint64_t> seeds;
    std::vector<ManifestFile> files;

    friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

struct DatasetManifest {
    std::vector<ManifestRecord> records;

    /// Throws std::invalid_argument on a duplicate id.
    void add(ManifestRecord record);

    friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

/// One JSON object per line.
std::string format_manifest(const DatasetManifest& manifest);
DatasetManifest parse_manifest(std::string_view text);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& path);

std::uint32_t file_crc32(const std::filesystem::path& path);

/// Problems found when checking every file against its checksum (empty when
/// all files exist and match).
std::vector<std::string> verify_manifest(const DatasetManifest& manifest, const std::filesystem::path& root);

// --- triplets -----------------------------------------------------------------

/// Writes root/<id>/{corrupted,flare_free,flare,prior}.png (16 bit),
/// mask.png (8 bit) and params.json. Returns the manifest record (split left
/// empty for the caller).
ManifestRecord write_triplet(const std::filesystem::path& root, const std::string& id,
                             const FlareTriplet& triplet, const std::string& source = {});

struct StoredTriplet {
    FlareTriplet triplet;
    Image prior;
};

/// Reads a triplet written by write_triplet; images are tagged with the
/// gamma recorded in params.json.
StoredTriplet read_triplet(const std::filesystem::path& dir);

} // namespace flarekit
