#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "iotstage/common.hpp"

namespace iotstage {

using AttrValue = std::variant<std::int64_t, double, std::string, bool>;
using Attrs = std::vector<std::pair<std::string, AttrValue>>;

struct TraceRecord {
  SimTime at{0};
  std::string kind;
  std::string subject;
  Attrs attrs;

  const AttrValue* find(std::string_view key) const;
  std::int64_t int_attr(std::string_view key) const;
  double real_attr(std::string_view key) const;
  std::string str_attr(std::string_view key) const;
  bool has(std::string_view key) const { return find(key) != nullptr; }
};

// Canonical JSON Lines form: keys at, kind, subject, attrs in that order and
// attrs in insertion order. No trailing newline.
std::string canonical_line(const TraceRecord& record);
TraceRecord parse_trace_line(const std::string& line);
std::vector<TraceRecord> read_trace_file(const std::string& path);

// Incremental SHA-256 (OpenSSL EVP).
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(std::string_view bytes);
  std::string hex_digest();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::string sha256_hex(std::string_view bytes);

// Append-only run trace. The hash covers every canonical line followed by
// '\n', i.e. it equals the SHA-256 of the JSONL file written to the sink.
class Trace {
 public:
  Trace();
  ~Trace();
  Trace(Trace&&) noexcept;
  Trace& operator=(Trace&&) noexcept;

  void append(TraceRecord record);
  void emit(SimTime at, std::string kind, std::string subject, Attrs attrs = {}) {
    append(TraceRecord{at, std::move(kind), std::move(subject), std::move(attrs)});
  }

  // When set, each canonical line is also written to the stream as it is appended.
  void set_sink(std::ostream* sink) { sink_ = sink; }
  void set_retain(bool retain) { retain_ = retain; }

  const std::vector<TraceRecord>& records() const { return records_; }
  std::size_t size() const { return count_; }
  std::string hash() const;
  void flush();

 private:
  std::vector<TraceRecord> records_;
  std::unique_ptr<Sha256> hasher_;
  std::ostream* sink_ = nullptr;
  bool retain_ = true;
  std::size_t count_ = 0;
  mutable std::string cached_hash_;
};

}  // namespace iotstage
