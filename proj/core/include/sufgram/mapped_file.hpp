#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>

namespace sufgram {

/// Read-only memory map of a whole file. Empty files map to an empty span.
class MappedFile {
 public:
  MappedFile() = default;
  explicit MappedFile(const std::filesystem::path& path);
  ~MappedFile();

  MappedFile(MappedFile&& other) noexcept;
  MappedFile& operator=(MappedFile&& other) noexcept;
  MappedFile(const MappedFile&) = delete;
  MappedFile& operator=(const MappedFile&) = delete;

  const std::uint8_t* data() const noexcept { return data_; }
  std::size_t size() const noexcept { return size_; }
  std::span<const std::uint8_t> bytes() const noexcept { return {data_, size_}; }

  /// Tells the kernel a byte range will be read soon.
  void will_need(std::size_t offset, std::size_t length) const noexcept;
  /// Marks the whole mapping as randomly accessed (disables readahead).
  void advise_random() const noexcept;

 private:
  void reset() noexcept;

  const std::uint8_t* data_ = nullptr;
  std::size_t size_ = 0;
};

}  // namespace sufgram
