#pragma once

#include "tccs/error.hpp"
#include "tccs/sampling.hpp"
#include "tccs/tensor.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace tccs {

// ---------------------------------------------------------------------------
// Text helpers
// ---------------------------------------------------------------------------

/// Shortest decimal that parses back to exactly `v`, independent of locale.
inline std::string format_double(double v) {
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return {buf.data(), res.ptr};
}

inline std::string format_int(std::uint64_t v) {
    std::array<char, 24> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return {buf.data(), res.ptr};
}

namespace detail {

inline std::vector<unsigned char> read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed on '" + path + "'");
    return data;
}

inline void write_all(const std::string& path, const void* data, std::size_t size) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out) throw IoError("write failed on '" + path + "'");
}

inline void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<unsigned char>(v >> (8 * b)));
}

inline std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int b = 7; b >= 0; --b) v = (v << 8) | p[b];
    return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Binary tensor file: "T3D1", three u64 LE dims, n1*n2*n3 f64 LE values in
// slice-major order (k, then i, then j).
// ---------------------------------------------------------------------------

inline constexpr std::array<char, 4> kTensorMagic{'T', '3', 'D', '1'};

inline std::vector<unsigned char> encode_tensor(const DenseTensor3& t) {
    std::vector<unsigned char> out(kTensorMagic.begin(), kTensorMagic.end());
    out.reserve(28 + 8 * t.size());
    detail::put_u64(out, t.n1());
    detail::put_u64(out, t.n2());
    detail::put_u64(out, t.n3());
    for (double v : t.values()) detail::put_u64(out, std::bit_cast<std::uint64_t>(v));
    return out;
}

inline DenseTensor3 decode_tensor(const std::vector<unsigned char>& data) {
    if (data.empty()) throw ParseError("tensor file is empty", 0);
    if (data.size() < 4 || std::memcmp(data.data(), kTensorMagic.data(), 4) != 0) {
        throw ParseError("bad magic (expected T3D1)", 0);
    }
    if (data.size() < 28) throw ParseError("truncated header", data.size());
    const std::uint64_t n1 = detail::get_u64(data.data() + 4);
    const std::uint64_t n2 = detail::get_u64(data.data() + 12);
    const std::uint64_t n3 = detail::get_u64(data.data() + 20);
    const std::uint64_t limit = (data.size() - 28) / 8;
    // Overflow-safe n1*n2*n3 <= available payload.
    if ((n1 != 0 && n2 > limit / n1) || (n1 * n2 != 0 && n3 > limit / (n1 * n2))) {
        throw ParseError("payload shorter than header dims " + format_int(n1) + "x" + format_int(n2) + "x" +
                             format_int(n3),
                         data.size());
    }
    const std::uint64_t count = n1 * n2 * n3;
    if (data.size() != 28 + 8 * count) {
        throw ParseError("payload length does not match header dims", 28 + 8 * count);
    }
    std::vector<double> values(count);
    for (std::uint64_t n = 0; n < count; ++n) {
        values[n] = std::bit_cast<double>(detail::get_u64(data.data() + 28 + 8 * n));
        if (!std::isfinite(values[n])) throw ParseError("non-finite value", 28 + 8 * n);
    }
    return DenseTensor3(Dims{n1, n2, n3}, std::move(values));
}

inline void write_tensor(const std::string& path, const DenseTensor3& t) {
    const auto bytes = encode_tensor(t);
    detail::write_all(path, bytes.data(), bytes.size());
}

inline DenseTensor3 read_tensor(const std::string& path) {
    return decode_tensor(detail::read_all(path));
}

// ---------------------------------------------------------------------------
// Plan text file
//
//   tccs-plan 1
//   dims <n1> <n2> <n3>
//   mode ccs
//   seed <u64>
//   p_R <real>
//   p_C <real>
//   replacement yes|no
//   values yes|no
//   I <count> <i>...
//   J <count> <j>...
//   omega_R <count>
//   i,j,k[,value]     (count rows)
//   omega_C <count>
//   i,j,k[,value]     (count rows)
// ---------------------------------------------------------------------------

inline std::string encode_plan(const CcsPlan& plan) {
    const bool vals = plan.has_values();
    std::string s = "tccs-plan 1\n";
    s += "dims " + format_int(plan.dims.n1) + " " + format_int(plan.dims.n2) + " " + format_int(plan.dims.n3) + "\n";
    s += "mode ccs\n";
    s += "seed " + format_int(plan.seed) + "\n";
    s += "p_R " + format_double(plan.p_R) + "\n";
    s += "p_C " + format_double(plan.p_C) + "\n";
    s += std::string("replacement ") + (plan.with_replacement ? "yes" : "no") + "\n";
    s += std::string("values ") + (vals ? "yes" : "no") + "\n";
    auto list = [&](const char* name, const IndexSet& set) {
        s += name;
        s += " " + format_int(set.size());
        for (auto v : set) s += " " + format_int(v);
        s += "\n";
    };
    list("I", plan.I);
    list("J", plan.J);
    auto rows = [&](const char* name, const ObservationSet& o) {
        s += std::string(name) + " " + format_int(o.size()) + "\n";
        for (const auto& e : o.entries) {
            s += format_int(e.i) + "," + format_int(e.j) + "," + format_int(e.k);
            if (vals) s += "," + format_double(e.value);
            s += "\n";
        }
    };
    rows("omega_R", plan.omega_R);
    rows("omega_C", plan.omega_C);
    return s;
}

namespace detail {

class PlanReader {
public:
    explicit PlanReader(std::string_view text) : text_(text) {}

    /// Next line without its terminator; throws at end of input.
    std::string_view line() {
        if (pos_ >= text_.size()) throw ParseError("unexpected end of plan file", pos_);
        line_start_ = pos_;
        const auto end = text_.find('\n', pos_);
        const std::size_t stop = end == std::string_view::npos ? text_.size() : end;
        std::string_view out = text_.substr(pos_, stop - pos_);
        if (!out.empty() && out.back() == '\r') out.remove_suffix(1);
        pos_ = stop == text_.size() ? stop : stop + 1;
        return out;
    }

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, line_start_); }

    /// Whitespace-separated fields of a "key v1 v2 ..." line.
    std::vector<std::string_view> fields(std::string_view key) {
        auto l = line();
        std::vector<std::string_view> out;
        std::size_t p = 0;
        while (p < l.size()) {
            while (p < l.size() && l[p] == ' ') ++p;
            std::size_t q = p;
            while (q < l.size() && l[q] != ' ') ++q;
            if (q > p) out.push_back(l.substr(p, q - p));
            p = q;
        }
        if (out.empty() || out.front() != key) fail("expected '" + std::string(key) + "'");
        out.erase(out.begin());
        return out;
    }

    template <typename T>
    T number(std::string_view s) const {
        T v{};
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) fail("bad number '" + std::string(s) + "'");
        return v;
    }

    bool yes_no(std::string_view s) const {
        if (s == "yes") return true;
        if (s == "no") return false;
        fail("expected yes or no");
    }

    [[nodiscard]] bool done() const noexcept { return pos_ >= text_.size(); }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t line_start_ = 0;
};

}  // namespace detail

/// Parses and validates a plan; structural problems raise ParseError with the
/// byte offset of the offending line, semantic ones (duplicates, ranges)
/// ParameterError.
inline CcsPlan decode_plan(std::string_view text) {
    if (text.empty()) throw ParseError("plan file is empty", 0);
    detail::PlanReader rd(text);
    if (rd.line() != "tccs-plan 1") rd.fail("bad plan header (expected 'tccs-plan 1')");
    CcsPlan plan;
    auto f = rd.fields("dims");
    if (f.size() != 3) rd.fail("dims needs three values");
    plan.dims = {rd.number<std::size_t>(f[0]), rd.number<std::size_t>(f[1]), rd.number<std::size_t>(f[2])};
    f = rd.fields("mode");
    if (f.size() != 1 || f[0] != "ccs") rd.fail("unsupported plan mode");
    f = rd.fields("seed");
    if (f.size() != 1) rd.fail("seed needs one value");
    plan.seed = rd.number<std::uint64_t>(f[0]);
    f = rd.fields("p_R");
    if (f.size() != 1) rd.fail("p_R needs one value");
    plan.p_R = rd.number<double>(f[0]);
    f = rd.fields("p_C");
    if (f.size() != 1) rd.fail("p_C needs one value");
    plan.p_C = rd.number<double>(f[0]);
    f = rd.fields("replacement");
    if (f.size() != 1) rd.fail("replacement needs yes or no");
    plan.with_replacement = rd.yes_no(f[0]);
    f = rd.fields("values");
    if (f.size() != 1) rd.fail("values needs yes or no");
    const bool vals = rd.yes_no(f[0]);

    auto index_list = [&](const char* key, std::size_t bound) {
        auto g = rd.fields(key);
        if (g.empty()) rd.fail(std::string(key) + " needs a count");
        const auto count = rd.number<std::size_t>(g[0]);
        if (g.size() != count + 1) rd.fail(std::string(key) + " count does not match its entries");
        std::vector<std::size_t> idx;
        for (std::size_t q = 1; q < g.size(); ++q) idx.push_back(rd.number<std::size_t>(g[q]));
        try {
            return IndexSet(std::move(idx), bound, plan.with_replacement);
        } catch (const ParameterError& e) {
            rd.fail(e.what());
        }
    };
    plan.I = index_list("I", plan.dims.n1);
    plan.J = index_list("J", plan.dims.n2);

    auto rows = [&](const char* key) {
        auto g = rd.fields(key);
        if (g.size() != 1) rd.fail(std::string(key) + " needs a count");
        const auto count = rd.number<std::size_t>(g[0]);
        ObservationSet o{plan.dims, {}, true, vals};
        o.entries.reserve(count);
        for (std::size_t n = 0; n < count; ++n) {
            const auto l = rd.line();
            std::array<std::string_view, 4> parts{};
            std::size_t np = 0, p = 0;
            while (np < 4) {
                const auto c = l.find(',', p);
                parts[np++] = l.substr(p, c == std::string_view::npos ? std::string_view::npos : c - p);
                if (c == std::string_view::npos) break;
                p = c + 1;
                if (np == 4) rd.fail("too many fields in observation row");
            }
            if (np != (vals ? 4u : 3u)) rd.fail("observation row needs " + std::string(vals ? "4" : "3") + " fields");
            Observation e;
            e.i = rd.number<std::uint32_t>(parts[0]);
            e.j = rd.number<std::uint32_t>(parts[1]);
            e.k = rd.number<std::uint32_t>(parts[2]);
            if (vals) {
                e.value = rd.number<double>(parts[3]);
                if (!std::isfinite(e.value)) rd.fail("non-finite observation value");
            }
            o.entries.push_back(e);
        }
        return o;
    };
    plan.omega_R = rows("omega_R");
    plan.omega_C = rows("omega_C");
    while (!rd.done()) {
        if (!rd.line().empty()) rd.fail("trailing content after omega_C");
    }
    plan.validate();
    return plan;
}

inline void write_plan(const std::string& path, const CcsPlan& plan) {
    const auto s = encode_plan(plan);
    detail::write_all(path, s.data(), s.size());
}

inline CcsPlan read_plan(const std::string& path) {
    const auto data = detail::read_all(path);
    return decode_plan(std::string_view(reinterpret_cast<const char*>(data.data()), data.size()));
}

}  // namespace tccs
