#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

namespace adpc {

enum class WriteStage { kTempWritten, kRenamed };

// Replaces `path` with `content` via write-temp, flush, rename. Readers see
// either the old or the new bytes. Throws Error(kIo).
void atomic_write_file(const std::filesystem::path& path, std::string_view content, bool durable = true);

// Test seam: invoked at each stage of every atomic_write_file call. A hook
// that throws simulates a crash at that point. Pass nullptr to clear.
void set_atomic_write_fault_hook(std::function<void(WriteStage)> hook);

// Throws Error(kIo) when the file cannot be read.
std::string read_file(const std::filesystem::path& path);

}  // namespace adpc
