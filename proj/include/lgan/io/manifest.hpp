#pragma once

#include <string>

#include "lgan/scene/scene.hpp"

namespace lgan::io {

// JSON-lines manifest: a header object, then one object per scene. Unknown
// fields on any line survive a read/write round trip.
scene::DatasetManifest read_manifest(const std::string& path);
void write_manifest(const scene::DatasetManifest& manifest, const std::string& path);

// Checks that every referenced file exists relative to the manifest's
// directory; throws listing the first missing path.
void validate_manifest_files(const scene::DatasetManifest& manifest, const std::string& base_dir);

}  // namespace lgan::io
