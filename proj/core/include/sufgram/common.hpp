#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sufgram {

using TokenId = std::uint16_t;

/// End-of-document marker. Sorts after every real token under big-endian
/// byte comparison.
inline constexpr TokenId kSeparator = 0xFFFF;
inline constexpr TokenId kUnknownToken = 0;
inline constexpr TokenId kMaxTokenId = 0xFFFE;

inline constexpr int kFormatVersion = 1;

enum class ErrorCode {
  kInvalidArgument,
  kIo,
  kFormat,
  kIntegrity,
  kNotFound,
  kClauseTooFrequent,
  kUnsupported,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by CNF document search when no clause can be enumerated under the
/// per-term occurrence ceiling.
class ClauseTooFrequent : public Error {
 public:
  ClauseTooFrequent(std::size_t clause, std::uint64_t ceiling);

  std::size_t clause() const noexcept { return clause_; }
  std::uint64_t ceiling() const noexcept { return ceiling_; }

 private:
  std::size_t clause_;
  std::uint64_t ceiling_;
};

}  // namespace sufgram
