#include "iotstage/trace.hpp"

#include <openssl/evp.h>

#include <fstream>
#include "json.hpp"
#include <ostream>

namespace iotstage {

using ordered_json = nlohmann::ordered_json;

const AttrValue* TraceRecord::find(std::string_view key) const {
  for (const auto& [k, v] : attrs) {
    if (k == key) return &v;
  }
  return nullptr;
}

std::int64_t TraceRecord::int_attr(std::string_view key) const {
  const AttrValue* v = find(key);
  if (v == nullptr) throw Error(ErrorCode::kInvalidArgument, "missing attr " + std::string(key));
  if (const auto* i = std::get_if<std::int64_t>(v)) return *i;
  if (const auto* d = std::get_if<double>(v)) return static_cast<std::int64_t>(*d);
  throw Error(ErrorCode::kTypeMismatch, "attr " + std::string(key) + " is not numeric");
}

double TraceRecord::real_attr(std::string_view key) const {
  const AttrValue* v = find(key);
  if (v == nullptr) throw Error(ErrorCode::kInvalidArgument, "missing attr " + std::string(key));
  if (const auto* d = std::get_if<double>(v)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(v)) return static_cast<double>(*i);
  throw Error(ErrorCode::kTypeMismatch, "attr " + std::string(key) + " is not numeric");
}

std::string TraceRecord::str_attr(std::string_view key) const {
  const AttrValue* v = find(key);
  if (v == nullptr) return {};
  if (const auto* s = std::get_if<std::string>(v)) return *s;
  throw Error(ErrorCode::kTypeMismatch, "attr " + std::string(key) + " is not a string");
}

std::string canonical_line(const TraceRecord& record) {
  ordered_json attrs = ordered_json::object();
  for (const auto& [key, value] : record.attrs) {
    std::visit([&](const auto& v) { attrs[key] = v; }, value);
  }
  ordered_json line = ordered_json::object();
  line["at"] = record.at.count();
  line["kind"] = record.kind;
  line["subject"] = record.subject;
  line["attrs"] = std::move(attrs);
  return line.dump();
}

TraceRecord parse_trace_line(const std::string& line) {
  const auto doc = ordered_json::parse(line);
  TraceRecord record;
  record.at = SimTime(doc.at("at").get<std::int64_t>());
  record.kind = doc.at("kind").get<std::string>();
  record.subject = doc.at("subject").get<std::string>();
  for (const auto& [key, value] : doc.at("attrs").items()) {
    if (value.is_boolean()) {
      record.attrs.emplace_back(key, value.get<bool>());
    } else if (value.is_number_integer()) {
      record.attrs.emplace_back(key, value.get<std::int64_t>());
    } else if (value.is_number()) {
      record.attrs.emplace_back(key, value.get<double>());
    } else {
      record.attrs.emplace_back(key, value.get<std::string>());
    }
  }
  return record;
}

std::vector<TraceRecord> read_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open trace " + path);
  std::vector<TraceRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(parse_trace_line(line));
  }
  return out;
}

struct Sha256::Impl {
  EVP_MD_CTX* ctx = nullptr;
};

Sha256::Sha256() : impl_(std::make_unique<Impl>()) {
  impl_->ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(impl_->ctx, EVP_sha256(), nullptr);
}

Sha256::~Sha256() { EVP_MD_CTX_free(impl_->ctx); }

void Sha256::update(std::string_view bytes) {
  EVP_DigestUpdate(impl_->ctx, bytes.data(), bytes.size());
}

std::string Sha256::hex_digest() {
  // Finalize a copy so the running state stays usable.
  EVP_MD_CTX* copy = EVP_MD_CTX_new();
  EVP_MD_CTX_copy_ex(copy, impl_->ctx);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(copy, digest, &len);
  EVP_MD_CTX_free(copy);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string sha256_hex(std::string_view bytes) {
  Sha256 h;
  h.update(bytes);
  return h.hex_digest();
}

Trace::Trace() : hasher_(std::make_unique<Sha256>()) {}
Trace::~Trace() = default;
Trace::Trace(Trace&&) noexcept = default;
Trace& Trace::operator=(Trace&&) noexcept = default;

void Trace::append(TraceRecord record) {
  std::string line = canonical_line(record);
  line.push_back('\n');
  hasher_->update(line);
  if (sink_ != nullptr) *sink_ << line;
  cached_hash_.clear();
  ++count_;
  if (retain_) records_.push_back(std::move(record));
}

std::string Trace::hash() const {
  if (cached_hash_.empty()) cached_hash_ = hasher_->hex_digest();
  return cached_hash_;
}

void Trace::flush() {
  if (sink_ != nullptr) sink_->flush();
}

}  // namespace iotstage
