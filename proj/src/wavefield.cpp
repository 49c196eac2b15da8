#include "fracfga/wavefield.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>

namespace fracfga {

WaveField::WaveField(int d, std::array<double, 2> lo, std::array<double, 2> hi,
                     std::array<int, 2> samples)
    : dims(d), box_lo(lo), box_hi(hi), n(samples) {
    if (dims == 1) n[1] = 1;
    values.assign(static_cast<std::size_t>(n[0]) * n[1], Complex(0.0, 0.0));
    validate();
}

double WaveField::cell_volume() const {
    double v = dx(0);
    if (dims == 2) v *= dx(1);
    return v;
}

bool WaveField::same_grid(const WaveField& o) const {
    return dims == o.dims && n == o.n && box_lo == o.box_lo && box_hi == o.box_hi;
}

double WaveField::norm_l2() const { return std::sqrt(mass()); }

double WaveField::mass() const {
    double s = 0.0;
    for (const Complex& v : values) s += std::norm(v);
    return s * cell_volume();
}

void WaveField::validate() const {
    if (dims != 1 && dims != 2) throw ConfigError("field dims must be 1 or 2");
    for (int a = 0; a < dims; ++a) {
        if (!power_of_two(n[a]))
            throw ConfigError("grid size must be a power of two, got " + std::to_string(n[a]));
        if (!(box_hi[a] > box_lo[a])) throw ConfigError("degenerate box");
    }
    if (values.size() != static_cast<std::size_t>(n[0]) * n[1])
        throw ConfigError("value count does not match grid");
}

std::pair<double, double> l2_error(const WaveField& a, const WaveField& b) {
    if (!a.same_grid(b)) throw GridMismatchError("l2_error requires identical grids");
    double diff2 = 0.0, ref2 = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        diff2 += std::norm(a.values[i] - b.values[i]);
        ref2 += std::norm(b.values[i]);
    }
    const double vol = a.cell_volume();
    const double abs = std::sqrt(diff2 * vol);
    const double refn = std::sqrt(ref2 * vol);
    double rel;
    if (refn > 0.0)
        rel = abs / refn;
    else
        rel = abs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return {abs, rel};
}

void save_field(const WaveField& f, const std::string& path_stem) {
    if (f.dims == 1) {
        std::ofstream out(path_stem + ".csv");
        out << "x,re,im\n";
        char line[128];
        for (int i = 0; i < f.n[0]; ++i) {
            std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", f.x(0, i),
                          f.values[i].real(), f.values[i].imag());
            out << line;
        }
    } else {
        std::ofstream meta(path_stem + ".csv");
        meta << "key,value\n";
        meta << "dims," << f.dims << "\n";
        meta << "n0," << f.n[0] << "\nn1," << f.n[1] << "\n";
        char line[128];
        std::snprintf(line, sizeof line, "box_lo0,%.17g\nbox_lo1,%.17g\n", f.box_lo[0], f.box_lo[1]);
        meta << line;
        std::snprintf(line, sizeof line, "box_hi0,%.17g\nbox_hi1,%.17g\n", f.box_hi[0], f.box_hi[1]);
        meta << line;
        meta << "layout,row-major interleaved re im doubles\n";
        meta << "data," << path_stem << ".bin\n";
        std::ofstream bin(path_stem + ".bin", std::ios::binary);
        bin.write(reinterpret_cast<const char*>(f.values.data()),
                  static_cast<std::streamsize>(f.values.size() * sizeof(Complex)));
    }
}

namespace {
constexpr std::uint64_t kFieldMagic = 0x46474146464c4431ull; // "FGAFFLD1"
}

void save_field_binary(const WaveField& f, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path + " for writing");
    auto put = [&](const void* p, std::size_t sz) {
        out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(sz));
    };
    put(&kFieldMagic, sizeof kFieldMagic);
    std::int64_t d = f.dims;
    put(&d, sizeof d);
    put(f.box_lo.data(), sizeof f.box_lo);
    put(f.box_hi.data(), sizeof f.box_hi);
    std::int64_t nn[2] = {f.n[0], f.n[1]};
    put(nn, sizeof nn);
    put(f.values.data(), f.values.size() * sizeof(Complex));
}

WaveField load_field_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    auto get = [&](void* p, std::size_t sz) {
        in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(sz));
        if (!in) throw Error("truncated field file " + path);
    };
    std::uint64_t magic = 0;
    get(&magic, sizeof magic);
    if (magic != kFieldMagic) throw Error("bad field file " + path);
    std::int64_t d = 0;
    get(&d, sizeof d);
    WaveField f;
    f.dims = static_cast<int>(d);
    get(f.box_lo.data(), sizeof f.box_lo);
    get(f.box_hi.data(), sizeof f.box_hi);
    std::int64_t nn[2];
    get(nn, sizeof nn);
    f.n = {static_cast<int>(nn[0]), static_cast<int>(nn[1])};
    f.values.resize(static_cast<std::size_t>(f.n[0]) * f.n[1]);
    get(f.values.data(), f.values.size() * sizeof(Complex));
    f.validate();
    return f;
}

} // namespace fracfga
