// SPDX-License-Identifier: Apache-2.0
#include "ca/value.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <limits>

#include "ca/error.hpp"

namespace ca {
namespace {

int rank(const Value& v) {
    switch (v.index()) {
    case 0: return 0;
    case 1:
    case 2: return 1;
    case 3: return 2;
    default: return 3;
    }
}

std::weak_ordering compare_int_real(std::int64_t i, double d) {
    if (std::isnan(d)) return std::weak_ordering::greater;
    if (d >= 9223372036854775808.0) return std::weak_ordering::less;
    if (d < -9223372036854775808.0) return std::weak_ordering::greater;
    const double fl = std::floor(d);
    const auto fi = static_cast<std::int64_t>(fl);
    if (i < fi) return std::weak_ordering::less;
    if (i > fi) return std::weak_ordering::greater;
    return d > fl ? std::weak_ordering::less : std::weak_ordering::equivalent;
}

std::weak_ordering compare_real(double a, double b) {
    if (a < b) return std::weak_ordering::less;
    if (a > b) return std::weak_ordering::greater;
    return std::weak_ordering::equivalent;
}

std::weak_ordering compare_bytes(const void* a, std::size_t na, const void* b, std::size_t nb) {
    const int c = std::memcmp(a, b, std::min(na, nb));
    if (c != 0) return c < 0 ? std::weak_ordering::less : std::weak_ordering::greater;
    return na <=> nb;
}

constexpr char kHex[] = "0123456789abcdef";
constexpr char kHexUpper[] = "0123456789ABCDEF";  // SQLite quote() style

} // namespace

std::weak_ordering compare_values(const Value& a, const Value& b) {
    const int ra = rank(a);
    const int rb = rank(b);
    if (ra != rb) return ra <=> rb;
    switch (ra) {
    case 0:
        return std::weak_ordering::equivalent;
    case 1: {
        if (const auto* ia = std::get_if<std::int64_t>(&a)) {
            if (const auto* ib = std::get_if<std::int64_t>(&b)) return *ia <=> *ib;
            return compare_int_real(*ia, std::get<double>(b));
        }
        const double da = std::get<double>(a);
        if (const auto* ib = std::get_if<std::int64_t>(&b)) {
            return 0 <=> compare_int_real(*ib, da);
        }
        return compare_real(da, std::get<double>(b));
    }
    case 2: {
        const auto& sa = std::get<std::string>(a);
        const auto& sb = std::get<std::string>(b);
        return compare_bytes(sa.data(), sa.size(), sb.data(), sb.size());
    }
    default: {
        const auto& ba = std::get<Blob>(a).bytes;
        const auto& bb = std::get<Blob>(b).bytes;
        return compare_bytes(ba.data(), ba.size(), bb.data(), bb.size());
    }
    }
}

std::optional<double> parse_number(std::string_view s) {
    if (s.empty()) return std::nullopt;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (*first == '+') ++first;
    double out = 0;
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc{} || ptr != last || !std::isfinite(out)) return std::nullopt;
    return out;
}

std::optional<double> as_number(const Value& v) {
    if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    if (const auto* d = std::get_if<double>(&v)) {
        if (std::isfinite(*d)) return *d;
        return std::nullopt;
    }
    if (const auto* s = std::get_if<std::string>(&v)) return parse_number(*s);
    return std::nullopt;
}

std::string format_real(double d) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, d);
    std::string out(buf, ptr);
    if (std::isfinite(d) && out.find_first_of(".eE") == std::string::npos) out += ".0";
    return out;
}

std::string format_number(double d) {
    if (std::isfinite(d) && d == std::floor(d) && std::fabs(d) < 1e15) {
        return std::to_string(static_cast<long long>(d));
    }
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, d);
    return std::string(buf, ptr);
}

std::string to_text(const Value& v) {
    switch (v.index()) {
    case 0: return "NULL";
    case 1: return std::to_string(std::get<std::int64_t>(v));
    case 2: return format_real(std::get<double>(v));
    case 3: return std::get<std::string>(v);
    default: {
        std::string out = "X'";
        for (auto b : std::get<Blob>(v).bytes) {
            out += kHexUpper[b >> 4];
            out += kHexUpper[b & 0xF];
        }
        return out + "'";
    }
    }
}

std::string_view storage_class(const Value& v) {
    static constexpr std::string_view names[] = {"null", "integer", "real", "text", "blob"};
    return names[v.index()];
}

nlohmann::ordered_json value_to_json(const Value& v) {
    switch (v.index()) {
    case 0: return nullptr;
    case 1: return std::get<std::int64_t>(v);
    case 2: return std::get<double>(v);
    case 3: return std::get<std::string>(v);
    default: {
        std::string hex;
        for (auto b : std::get<Blob>(v).bytes) {
            hex += kHex[b >> 4];
            hex += kHex[b & 0xF];
        }
        nlohmann::ordered_json j;
        j["$blob"] = hex;
        return j;
    }
    }
}

Value value_from_json(const nlohmann::ordered_json& j) {
    if (j.is_null()) return std::monostate{};
    if (j.is_number_integer()) return j.get<std::int64_t>();
    if (j.is_number_float()) return j.get<double>();
    if (j.is_string()) return j.get<std::string>();
    if (j.is_object() && j.size() == 1 && j.contains("$blob") && j["$blob"].is_string()) {
        const auto hex = j["$blob"].get<std::string>();
        if (hex.size() % 2 != 0) throw InvariantError("odd-length blob literal");
        Blob b;
        for (std::size_t i = 0; i < hex.size(); i += 2) {
            unsigned byte = 0;
            auto [p, ec] = std::from_chars(hex.data() + i, hex.data() + i + 2, byte, 16);
            if (ec != std::errc{} || p != hex.data() + i + 2) throw InvariantError("bad blob literal");
            b.bytes.push_back(static_cast<std::uint8_t>(byte));
        }
        return b;
    }
    throw InvariantError("unsupported cell value in JSON: " + j.dump());
}

} // namespace ca
