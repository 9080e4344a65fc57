#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace glckpt {

// Every failure in the library throws Error with one of these codes. Callers that
// care about the kind of failure switch on code(); the message is for humans.
enum class Errc {
  // driver
  DriverDestroyed,
  UnknownContext,
  UnknownKind,
  UnknownId,
  UnknownKey,
  BadValue,
  // interposition
  StaleVirtualId,
  UnknownVirtual,
  RealIdCollision,
  // log store
  SequenceGap,
  ReplayDivergence,
  BadMagic,
  BadVersion,
  TruncatedLog,
  ChecksumMismatch,
  // split-process sessions
  DuplicateLabel,
  SessionNotLive,
  AlreadyPaired,
  ImageCorrupt,
  // display server
  DisplayUnavailable,
  NotConnected,
  UnknownWindow,
  DimensionMismatch,
};

inline const char* errc_name(Errc code) {
  switch (code) {
    case Errc::DriverDestroyed: return "driver destroyed";
    case Errc::UnknownContext: return "unknown context";
    case Errc::UnknownKind: return "unknown resource kind";
    case Errc::UnknownId: return "unknown id";
    case Errc::UnknownKey: return "unknown state key";
    case Errc::BadValue: return "bad value";
    case Errc::StaleVirtualId: return "stale virtual id";
    case Errc::UnknownVirtual: return "unknown virtual id";
    case Errc::RealIdCollision: return "real id collision";
    case Errc::SequenceGap: return "sequence gap";
    case Errc::ReplayDivergence: return "replay divergence";
    case Errc::BadMagic: return "bad magic";
    case Errc::BadVersion: return "bad version";
    case Errc::TruncatedLog: return "truncated log";
    case Errc::ChecksumMismatch: return "checksum mismatch";
    case Errc::DuplicateLabel: return "duplicate label";
    case Errc::SessionNotLive: return "session not live";
    case Errc::AlreadyPaired: return "already paired";
    case Errc::ImageCorrupt: return "image corrupt";
    case Errc::DisplayUnavailable: return "display unavailable";
    case Errc::NotConnected: return "not connected";
    case Errc::UnknownWindow: return "unknown window";
    case Errc::DimensionMismatch: return "dimension mismatch";
  }
  return "error";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

// 64-bit FNV-1a. Used for framebuffer hashes, serialized-log checksums, and
// checkpoint-image trailers, so the constants are load-bearing: changing them
// breaks every on-disk artifact.
inline constexpr uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ull;
inline constexpr uint64_t kFnvPrime = 0x100000001b3ull;

inline uint64_t fnv1a64(const uint8_t* data, size_t len, uint64_t seed = kFnvOffsetBasis) {
  uint64_t h = seed;
  for (size_t i = 0; i < len; ++i) {
    h ^= data[i];
    h *= kFnvPrime;
  }
  return h;
}

inline uint64_t fnv1a64(const std::vector<uint8_t>& data, uint64_t seed = kFnvOffsetBasis) {
  return fnv1a64(data.data(), data.size(), seed);
}

}  // namespace glckpt
