#include "facefit/io.hpp"

#include "facefit/errors.hpp"
#include "facefit/log.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>
#include <vector>

namespace facefit {

namespace {

[[noreturn]] void io_error(const fs::path& path, const std::string& what)
{
    throw Error(ErrorCode::io, path.string() + ": " + what);
}

[[noreturn]] void parse_error(const fs::path& path, std::size_t line, const std::string& what)
{
    throw Error(ErrorCode::parse, path.string() + ":" + std::to_string(line) + ": " + what);
}

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt9(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::vector<std::string> split_ws(const std::string& line)
{
    std::vector<std::string> out;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok)
        out.push_back(tok);
    return out;
}

std::string strip_comment(const std::string& line)
{
    const auto pos = line.find('#');
    return pos == std::string::npos ? line : line.substr(0, pos);
}

bool parse_double(const std::string& s, double& out)
{
    const char* end = s.data() + s.size();
    const auto r = std::from_chars(s.data(), end, out);
    if (r.ec == std::errc() && r.ptr == end)
        return true;
    // from_chars does not accept "inf"/"nan" spellings produced by printf.
    if (s == "inf" || s == "+inf")
        return out = HUGE_VAL, true;
    if (s == "-inf")
        return out = -HUGE_VAL, true;
    return false;
}

template <typename Int>
bool parse_int(const std::string& s, Int& out)
{
    const char* end = s.data() + s.size();
    const auto r = std::from_chars(s.data(), end, out);
    return r.ec == std::errc() && r.ptr == end;
}

std::vector<std::string> lines_of(const std::string& text)
{
    std::vector<std::string> lines;
    std::string line;
    std::istringstream in(text);
    while (std::getline(in, line))
    {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

double srgb_to_linear(double c)
{
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double c)
{
    return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

std::uint8_t to_byte(double v)
{
    const double c = std::clamp(v, 0.0, 1.0);
    return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

// In-memory PNG codec.

struct PngReadSource
{
    const std::string* data;
    std::size_t offset;
};

void png_read_from_string(png_structp png, png_bytep out, png_size_t count)
{
    auto* src = static_cast<PngReadSource*>(png_get_io_ptr(png));
    if (src->offset + count > src->data->size())
        png_error(png, "unexpected end of PNG data");
    std::memcpy(out, src->data->data() + src->offset, count);
    src->offset += count;
}

void png_write_to_string(png_structp png, png_bytep data, png_size_t count)
{
    static_cast<std::string*>(png_get_io_ptr(png))->append(reinterpret_cast<const char*>(data), count);
}

void png_flush_noop(png_structp) {}

struct DecodedPng
{
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> pixels; // row-major, `channels` bytes per pixel
};

enum class PngMode { rgb, labels };

DecodedPng decode_png(const fs::path& path, PngMode mode)
{
    const std::string bytes = read_file(path);
    if (bytes.size() < 8 || png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) != 0)
        throw Error(ErrorCode::parse, path.string() + ": not a PNG file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png)
        io_error(path, "libpng initialisation failed");
    png_infop info = png_create_info_struct(png);
    if (!info)
    {
        png_destroy_read_struct(&png, nullptr, nullptr);
        io_error(path, "libpng initialisation failed");
    }
    DecodedPng out;
    std::vector<png_bytep> rows;
    PngReadSource source{&bytes, 0};
    std::string failure;
    if (setjmp(png_jmpbuf(png)))
    {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(ErrorCode::parse, path.string() + ": corrupt PNG data");
    }
    png_set_read_fn(png, &source, png_read_from_string);
    png_read_info(png, info);
    const png_byte color = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);
    if (mode == PngMode::labels)
    {
        if (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_PALETTE)
            failure = "label maps must be grayscale or palette PNGs";
        else if (depth == 16)
            failure = "16-bit label maps are not supported";
        else
        {
            if (depth < 8)
                png_set_packing(png);
            if (color == PNG_COLOR_TYPE_GRAY && depth < 8)
                png_set_expand_gray_1_2_4_to_8(png);
        }
    }
    else
    {
        png_set_strip_16(png);
        png_set_packing(png);
        if (color == PNG_COLOR_TYPE_PALETTE)
            png_set_palette_to_rgb(png);
        if (color == PNG_COLOR_TYPE_GRAY && depth < 8)
            png_set_expand_gray_1_2_4_to_8(png);
        if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
            png_set_gray_to_rgb(png);
        png_set_strip_alpha(png);
    }
    if (failure.empty())
    {
        png_read_update_info(png, info);
        out.width = static_cast<int>(png_get_image_width(png, info));
        out.height = static_cast<int>(png_get_image_height(png, info));
        out.channels = png_get_channels(png, info);
        const std::size_t stride = png_get_rowbytes(png, info);
        if (stride != static_cast<std::size_t>(out.width) * out.channels)
            failure = "unexpected PNG row layout";
        else
        {
            out.pixels.resize(stride * out.height);
            rows.resize(out.height);
            for (int r = 0; r < out.height; ++r)
                rows[r] = out.pixels.data() + stride * r;
            png_read_image(png, rows.data());
            png_read_end(png, nullptr);
        }
    }
    png_destroy_read_struct(&png, &info, nullptr);
    if (!failure.empty())
        throw Error(ErrorCode::parse, path.string() + ": " + failure);
    return out;
}

std::string encode_png(int width, int height, int color_type, const std::vector<std::uint8_t>& pixels)
{
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png)
        throw Error(ErrorCode::io, "libpng initialisation failed");
    png_infop info = png_create_info_struct(png);
    if (!info)
    {
        png_destroy_write_struct(&png, nullptr);
        throw Error(ErrorCode::io, "libpng initialisation failed");
    }
    std::string out;
    const int channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
    std::vector<png_bytep> rows(height);
    for (int r = 0; r < height; ++r)
        rows[r] = const_cast<png_bytep>(pixels.data() + static_cast<std::size_t>(r) * width * channels);
    if (setjmp(png_jmpbuf(png)))
    {
        png_destroy_write_struct(&png, &info);
        throw Error(ErrorCode::io, "PNG encoding failed");
    }
    png_set_write_fn(png, &out, png_write_to_string, png_flush_noop);
    png_set_IHDR(png, info, width, height, 8, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

// Little-endian binary helpers for the model container.

template <typename T>
void put(std::string& out, T value)
{
    if constexpr (std::endian::native == std::endian::big)
    {
        auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(value);
        std::reverse(bytes.begin(), bytes.end());
        out.append(bytes.data(), bytes.size());
    }
    else
    {
        char bytes[sizeof(T)];
        std::memcpy(bytes, &value, sizeof(T));
        out.append(bytes, sizeof(T));
    }
}

struct Reader
{
    const std::string& data;
    std::size_t offset;
    const fs::path& path;

    template <typename T>
    T get()
    {
        if (offset + sizeof(T) > data.size())
            throw Error(ErrorCode::parse, path.string() + ": model file is truncated");
        std::array<char, sizeof(T)> bytes;
        std::memcpy(bytes.data(), data.data() + offset, sizeof(T));
        offset += sizeof(T);
        if constexpr (std::endian::native == std::endian::big)
            std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    }
};

void put_doubles(std::string& out, const double* data, Eigen::Index n)
{
    for (Eigen::Index i = 0; i < n; ++i)
        put(out, data[i]);
}

void get_doubles(Reader& in, double* data, Eigen::Index n)
{
    for (Eigen::Index i = 0; i < n; ++i)
        data[i] = in.template get<double>();
}

} // namespace

void write_file_atomic(const fs::path& path, std::string_view bytes)
{
    if (path.has_parent_path())
    {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            io_error(path, "cannot open for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out)
        {
            out.close();
            fs::remove(tmp);
            io_error(path, "write failed");
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec)
    {
        fs::remove(tmp, ec);
        io_error(path, "cannot rename temporary file into place");
    }
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        io_error(path, "cannot open for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad())
        io_error(path, "read failed");
    return ss.str();
}

ImageRGB read_png_rgb(const fs::path& path, bool srgb)
{
    const DecodedPng png = decode_png(path, PngMode::rgb);
    ImageRGB image(png.width, png.height);
    for (std::size_t i = 0; i < image.size(); ++i)
    {
        Eigen::Vector3d c;
        for (int k = 0; k < 3; ++k)
        {
            const double v = png.pixels[3 * i + k] / 255.0;
            c[k] = srgb ? srgb_to_linear(v) : v;
        }
        image[i] = c;
    }
    return image;
}

std::string encode_png_rgb(const ImageRGB& image, bool srgb)
{
    if (image.empty())
        throw Error(ErrorCode::shape, "cannot encode an empty image");
    std::vector<std::uint8_t> pixels(image.size() * 3);
    for (std::size_t i = 0; i < image.size(); ++i)
        for (int k = 0; k < 3; ++k)
        {
            const double v = std::clamp(image[i][k], 0.0, 1.0);
            pixels[3 * i + k] = to_byte(srgb ? linear_to_srgb(v) : v);
        }
    return encode_png(image.width(), image.height(), PNG_COLOR_TYPE_RGB, pixels);
}

void write_png_rgb(const fs::path& path, const ImageRGB& image, bool srgb)
{
    write_file_atomic(path, encode_png_rgb(image, srgb));
}

Grid<std::uint8_t> read_png_labels(const fs::path& path)
{
    const DecodedPng png = decode_png(path, PngMode::labels);
    Grid<std::uint8_t> out(png.width, png.height);
    out.data() = png.pixels;
    return out;
}

void write_png_gray(const fs::path& path, const Grid<std::uint8_t>& gray)
{
    if (gray.empty())
        throw Error(ErrorCode::shape, "cannot encode an empty image");
    const std::vector<std::uint8_t>& pixels = gray.data();
    write_file_atomic(path, encode_png(gray.width(), gray.height(), PNG_COLOR_TYPE_GRAY, pixels));
}

EdgeLinesMap read_edge_map(const fs::path& path)
{
    const Grid<std::uint8_t> gray = read_png_labels(path);
    EdgeLinesMap out(gray.width(), gray.height());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = gray[i] / 255.0;
    return out;
}

Mask read_mask(const fs::path& path)
{
    const Grid<std::uint8_t> gray = read_png_labels(path);
    Mask out(gray.width(), gray.height());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = gray[i] != 0;
    return out;
}

fs::path bump_sidecar_path(const fs::path& png_path)
{
    fs::path p = png_path;
    p.replace_extension(".txt");
    return p;
}

void write_bump(const fs::path& png_path, const BumpMap& bump)
{
    Grid<std::uint8_t> codes(bump.width(), bump.height());
    for (int r = 0; r < bump.height(); ++r)
        for (int c = 0; c < bump.width(); ++c)
            codes(r, c) = static_cast<std::uint8_t>(std::clamp(std::lround(bump.code(r, c)), 0L, 255L));
    write_png_gray(png_path, codes);
    const std::string sidecar = "width " + std::to_string(bump.width()) + "\nheight " +
                                std::to_string(bump.height()) + "\ndelta_max " + fmt(bump.delta_max) + "\n";
    write_file_atomic(bump_sidecar_path(png_path), sidecar);
}

BumpMap read_bump(const fs::path& png_path)
{
    const Grid<std::uint8_t> codes = read_png_labels(png_path);
    const fs::path side = bump_sidecar_path(png_path);
    std::map<std::string, std::string> kv;
    std::size_t n = 0;
    for (const std::string& line : lines_of(read_file(side)))
    {
        ++n;
        const auto tok = split_ws(strip_comment(line));
        if (tok.empty())
            continue;
        if (tok.size() != 2)
            parse_error(side, n, "expected 'key value'");
        kv[tok[0]] = tok[1];
    }
    double delta = 0.0;
    int w = 0, h = 0;
    if (!kv.count("delta_max") || !parse_double(kv["delta_max"], delta))
        parse_error(side, n, "missing or invalid delta_max");
    if (!parse_int(kv["width"], w) || !parse_int(kv["height"], h) || w != codes.width() || h != codes.height())
        parse_error(side, n, "width/height missing or inconsistent with the PNG");
    BumpMap bump = BumpMap::neutral(w, h, delta);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            bump.set_code(r, c, codes(r, c));
    return bump;
}

void write_pfm(const fs::path& path, const Grid<double>& map)
{
    std::string out = "Pf\n" + std::to_string(map.width()) + " " + std::to_string(map.height()) + "\n-1.0\n";
    for (int r = map.height() - 1; r >= 0; --r)
        for (int c = 0; c < map.width(); ++c)
            put(out, static_cast<float>(map(r, c)));
    write_file_atomic(path, out);
}

Grid<double> read_pfm(const fs::path& path)
{
    const std::string data = read_file(path);
    std::size_t pos = 0;
    auto token = [&]() {
        while (pos < data.size() && std::isspace(static_cast<unsigned char>(data[pos])))
            ++pos;
        const std::size_t start = pos;
        while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos])))
            ++pos;
        return data.substr(start, pos - start);
    };
    if (token() != "Pf")
        throw Error(ErrorCode::parse, path.string() + ": only single-channel PFM ('Pf') is supported");
    int w = 0, h = 0;
    double scale = 0.0;
    if (!parse_int(token(), w) || !parse_int(token(), h) || !parse_double(token(), scale) || w <= 0 || h <= 0)
        throw Error(ErrorCode::parse, path.string() + ": malformed PFM header");
    ++pos; // single whitespace byte after the scale
    const bool little = scale < 0.0;
    const std::size_t need = static_cast<std::size_t>(w) * h * 4;
    if (data.size() < pos + need)
        throw Error(ErrorCode::parse, path.string() + ": PFM data is truncated");
    Grid<double> map(w, h);
    for (int r = h - 1; r >= 0; --r)
        for (int c = 0; c < w; ++c)
        {
            std::array<char, 4> b;
            std::memcpy(b.data(), data.data() + pos, 4);
            pos += 4;
            if (little != (std::endian::native == std::endian::little))
                std::reverse(b.begin(), b.end());
            map(r, c) = static_cast<double>(std::bit_cast<float>(b));
        }
    return map;
}

LandmarkSet read_landmarks(const fs::path& path)
{
    LandmarkSet set;
    int k = 0;
    std::size_t n = 0;
    for (const std::string& line : lines_of(read_file(path)))
    {
        ++n;
        const auto tok = split_ws(strip_comment(line));
        if (tok.empty())
            continue;
        if (tok.size() < 2 || tok.size() > 3)
            parse_error(path, n, "expected 'x y [confidence]'");
        if (k >= landmark_count)
            parse_error(path, n, "more than 68 landmarks");
        double x, y, c = 1.0;
        if (!parse_double(tok[0], x) || !parse_double(tok[1], y) || (tok.size() == 3 && !parse_double(tok[2], c)))
            parse_error(path, n, "invalid number");
        set.points[k] = Eigen::Vector2d(x, y);
        set.confidence[k] = c;
        ++k;
    }
    if (k != landmark_count)
        throw Error(ErrorCode::parse,
                    path.string() + ": expected 68 landmarks, found " + std::to_string(k));
    try
    {
        set.validate();
    }
    catch (const Error& e)
    {
        throw Error(ErrorCode::parse, path.string() + ": " + e.what());
    }
    return set;
}

void write_landmarks(const fs::path& path, const LandmarkSet& landmarks)
{
    std::string out;
    for (int k = 0; k < landmark_count; ++k)
        out += fmt(landmarks.points[k].x()) + " " + fmt(landmarks.points[k].y()) + " " +
               fmt(landmarks.confidence[k]) + "\n";
    write_file_atomic(path, out);
}

CoordinateSet read_coordinates(const fs::path& path)
{
    CoordinateSet coords;
    std::size_t n = 0;
    for (const std::string& line : lines_of(read_file(path)))
    {
        ++n;
        const auto tok = split_ws(strip_comment(line));
        if (tok.empty())
            continue;
        PixelCoord p;
        if (tok.size() != 2 || !parse_int(tok[0], p.x) || !parse_int(tok[1], p.y))
            parse_error(path, n, "expected two integers 'x y'");
        coords.push_back(p);
    }
    return coords;
}

ParsingSchema read_schema(const fs::path& path)
{
    std::vector<ParsingCategory> categories;
    std::size_t n = 0;
    for (const std::string& line : lines_of(read_file(path)))
    {
        ++n;
        const auto tok = split_ws(strip_comment(line));
        if (tok.empty())
            continue;
        ParsingCategory cat;
        if (tok.size() < 2 || tok.size() > 3 || !parse_int(tok[0], cat.index) || cat.index < 0 || cat.index > 255)
            parse_error(path, n, "expected 'index name [face|occluder]' with index in [0, 255]");
        cat.name = tok[1];
        if (tok.size() == 3)
        {
            if (tok[2] == "face")
                cat.facial = true;
            else if (tok[2] == "occluder")
                cat.default_occluder = true;
            else
                parse_error(path, n, "role must be 'face' or 'occluder'");
        }
        categories.push_back(cat);
    }
    try
    {
        return ParsingSchema(path.stem().string(), std::move(categories));
    }
    catch (const Error& e)
    {
        throw Error(ErrorCode::schema, path.string() + ": " + e.what());
    }
}

void write_model(const fs::path& path, const MorphableModel& model)
{
    std::string out = "facefit-model 1\n";
    out += "vertices " + std::to_string(model.vertex_count()) + "\n";
    out += "n_id " + std::to_string(model.n_id()) + "\n";
    out += "n_exp " + std::to_string(model.n_exp()) + "\n";
    out += "n_tex " + std::to_string(model.n_tex()) + "\n";
    out += "triangles " + std::to_string(model.triangles().size()) + "\n";
    out += "landmarks " + std::to_string(model.landmark_indices().size()) + "\n";
    out += "end_header\n";
    put_doubles(out, model.mean_shape().data(), model.mean_shape().size());
    put_doubles(out, model.id_basis().data(), model.id_basis().size());
    put_doubles(out, model.exp_basis().data(), model.exp_basis().size());
    put_doubles(out, model.mean_albedo().data(), model.mean_albedo().size());
    put_doubles(out, model.tex_basis().data(), model.tex_basis().size());
    put_doubles(out, model.id_sigma().data(), model.id_sigma().size());
    put_doubles(out, model.exp_sigma().data(), model.exp_sigma().size());
    put_doubles(out, model.tex_sigma().data(), model.tex_sigma().size());
    for (const Triangle& t : model.triangles())
        for (int v : t)
            put(out, static_cast<std::uint32_t>(v));
    for (int v : model.landmark_indices())
        put(out, static_cast<std::uint32_t>(v));
    write_file_atomic(path, out);
}

MorphableModel read_model(const fs::path& path)
{
    const std::string data = read_file(path);
    const std::string marker = "end_header\n";
    const auto end = data.find(marker);
    if (data.rfind("facefit-model 1\n", 0) != 0 || end == std::string::npos)
        throw Error(ErrorCode::parse, path.string() + ": not a facefit model file");
    std::map<std::string, long long> header;
    for (const std::string& line : lines_of(data.substr(0, end)))
    {
        const auto tok = split_ws(line);
        long long v = 0;
        if (tok.size() == 2 && parse_int(tok[1], v))
            header[tok[0]] = v;
    }
    for (const char* key : {"vertices", "n_id", "n_exp", "n_tex", "triangles", "landmarks"})
        if (!header.count(key) || header[key] < 0 || header[key] > (1LL << 28))
            throw Error(ErrorCode::parse, path.string() + ": header field '" + key + "' missing or invalid");
    const Eigen::Index n3 = 3 * header["vertices"];
    const Eigen::Index nid = header["n_id"], nexp = header["n_exp"], ntex = header["n_tex"];
    const std::size_t expected = end + marker.size() +
                                 8 * static_cast<std::size_t>(n3 * (2 + nid + nexp + ntex) + nid + nexp + ntex) +
                                 4 * static_cast<std::size_t>(3 * header["triangles"] + header["landmarks"]);
    if (data.size() != expected)
        throw Error(ErrorCode::parse, path.string() + ": model file size does not match its header");

    Reader in{data, end + marker.size(), path};
    Eigen::VectorXd mean(n3), albedo(n3), sid(nid), sexp(nexp), stex(ntex);
    Eigen::MatrixXd id(n3, nid), ex(n3, nexp), tex(n3, ntex);
    get_doubles(in, mean.data(), mean.size());
    get_doubles(in, id.data(), id.size());
    get_doubles(in, ex.data(), ex.size());
    get_doubles(in, albedo.data(), albedo.size());
    get_doubles(in, tex.data(), tex.size());
    get_doubles(in, sid.data(), sid.size());
    get_doubles(in, sexp.data(), sexp.size());
    get_doubles(in, stex.data(), stex.size());
    std::vector<Triangle> tris(static_cast<std::size_t>(header["triangles"]));
    for (Triangle& t : tris)
        for (int& v : t)
            v = static_cast<int>(in.get<std::uint32_t>());
    std::vector<int> lms(static_cast<std::size_t>(header["landmarks"]));
    for (int& v : lms)
        v = static_cast<int>(in.get<std::uint32_t>());
    try
    {
        return MorphableModel(std::move(mean), std::move(id), std::move(ex), std::move(albedo), std::move(tex),
                              std::move(tris), std::move(lms), std::move(sid), std::move(sexp), std::move(stex));
    }
    catch (const Error& e)
    {
        throw Error(ErrorCode::parse, path.string() + ": invalid model: " + e.what());
    }
}

std::string obj_text(const Mesh& mesh)
{
    std::string out;
    const int nv = mesh.vertex_count();
    const bool colored = mesh.colors.cols() == nv;
    for (int v = 0; v < nv; ++v)
    {
        out += "v " + fmt9(mesh.vertices(0, v)) + " " + fmt9(mesh.vertices(1, v)) + " " + fmt9(mesh.vertices(2, v));
        if (colored)
            out += " " + fmt9(mesh.colors(0, v)) + " " + fmt9(mesh.colors(1, v)) + " " + fmt9(mesh.colors(2, v));
        out += "\n";
    }
    for (const Triangle& t : mesh.triangles)
        out += "f " + std::to_string(t[0] + 1) + " " + std::to_string(t[1] + 1) + " " + std::to_string(t[2] + 1) +
               "\n";
    return out;
}

void export_obj(const Mesh& mesh, const fs::path& path)
{
    const int nv = mesh.vertex_count();
    for (const Triangle& t : mesh.triangles)
        for (int v : t)
            if (v < 0 || v >= nv)
                throw Error(ErrorCode::shape, "mesh triangle index " + std::to_string(v) + " out of range");
    if (nv == 0)
        log_warn("exporting an empty mesh to " + path.string());
    write_file_atomic(path, obj_text(mesh));
}

Mesh import_obj(const fs::path& path)
{
    std::vector<Eigen::Vector3d> pos, col;
    std::vector<Triangle> tris;
    std::size_t n = 0;
    for (const std::string& line : lines_of(read_file(path)))
    {
        ++n;
        const auto tok = split_ws(strip_comment(line));
        if (tok.empty())
            continue;
        if (tok[0] == "v")
        {
            if (tok.size() != 4 && tok.size() != 7)
                parse_error(path, n, "vertex needs 3 or 6 numbers");
            double x[6] = {0, 0, 0, 0.5, 0.5, 0.5};
            for (std::size_t k = 1; k < tok.size(); ++k)
                if (!parse_double(tok[k], x[k - 1]))
                    parse_error(path, n, "invalid number");
            pos.emplace_back(x[0], x[1], x[2]);
            col.emplace_back(x[3], x[4], x[5]);
        }
        else if (tok[0] == "f")
        {
            if (tok.size() != 4)
                parse_error(path, n, "only triangular faces are supported");
            Triangle t;
            for (int k = 0; k < 3; ++k)
            {
                const std::string idx = tok[k + 1].substr(0, tok[k + 1].find('/'));
                if (!parse_int(idx, t[k]) || t[k] < 1)
                    parse_error(path, n, "invalid face index");
                --t[k];
            }
            tris.push_back(t);
        }
    }
    Mesh mesh;
    const int nv = static_cast<int>(pos.size());
    mesh.vertices.resize(3, nv);
    mesh.colors.resize(3, nv);
    for (int v = 0; v < nv; ++v)
    {
        mesh.vertices.col(v) = pos[v];
        mesh.colors.col(v) = col[v];
    }
    for (const Triangle& t : tris)
        for (int v : t)
            if (v >= nv)
                throw Error(ErrorCode::parse, path.string() + ": face references a missing vertex");
    mesh.triangles = std::move(tris);
    mesh.normals = vertex_normals(mesh.vertices, mesh.triangles).normals;
    return mesh;
}

void apply_config_text(const std::string& text, FitConfig& config, LossWeights& weights)
{
    std::size_t n = 0;
    const fs::path where("config");
    std::map<std::string, double*> reals = {
        {"lambda_feat", &weights.lambda_feat},
        {"lambda_regu", &weights.lambda_regu},
        {"lambda_phot", &weights.lambda_phot},
        {"lambda_land", &weights.lambda_land},
        {"tolerance", &config.tolerance},
        {"gradient_tolerance", &config.gradient_tolerance},
        {"coarse_learning_rate", &config.coarse_adam.learning_rate},
        {"detail_learning_rate", &config.detail_adam.learning_rate},
        {"coarse_lr_decay", &config.coarse_lr_decay},
        {"detail_lr_decay", &config.detail_lr_decay},
        {"delta_max", &config.delta_max},
    };
    for (const std::string& raw : lines_of(text))
    {
        ++n;
        const std::string line = strip_comment(raw);
        if (split_ws(line).empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            parse_error(where, n, "expected 'key = value'");
        const auto key_tok = split_ws(line.substr(0, eq));
        const auto val_tok = split_ws(line.substr(eq + 1));
        if (key_tok.size() != 1 || val_tok.size() != 1)
            parse_error(where, n, "expected 'key = value'");
        const std::string& key = key_tok[0];
        const std::string& value = val_tok[0];
        if (auto it = reals.find(key); it != reals.end())
        {
            if (!parse_double(value, *it->second))
                parse_error(where, n, "invalid number for " + key);
        }
        else if (key == "beta1" || key == "beta2" || key == "epsilon")
        {
            double v;
            if (!parse_double(value, v))
                parse_error(where, n, "invalid number for " + key);
            double AdamHyper::*field = key == "beta1" ? &AdamHyper::beta1
                                       : key == "beta2" ? &AdamHyper::beta2
                                                        : &AdamHyper::epsilon;
            config.coarse_adam.*field = v;
            config.detail_adam.*field = v;
        }
        else if (key == "max_iterations" || key == "window")
        {
            int v;
            if (!parse_int(value, v))
                parse_error(where, n, "invalid integer for " + key);
            (key == "window" ? config.window : config.max_iterations) = v;
        }
        else if (key == "seed")
        {
            if (!parse_int(value, config.seed))
                parse_error(where, n, "invalid seed");
        }
        else if (key == "lighting")
        {
            if (value == "shared")
                config.lighting = LightingProfile::shared;
            else if (value == "per_channel")
                config.lighting = LightingProfile::per_channel;
            else
                parse_error(where, n, "lighting must be 'shared' or 'per_channel'");
        }
        else
            parse_error(where, n, "unknown key '" + key + "'");
    }
    weights.validate();
    config.validate();
}

void load_config(const fs::path& path, FitConfig& config, LossWeights& weights)
{
    try
    {
        apply_config_text(read_file(path), config, weights);
    }
    catch (const Error& e)
    {
        if (e.code() == ErrorCode::io)
            throw;
        throw Error(e.code() == ErrorCode::parse ? ErrorCode::parse : e.code(), path.string() + ": " + e.what());
    }
}

std::string report_table(const FitReport& report)
{
    std::string out = "stage\titeration\ttotal\tfeat\tregu\tphot\tland\n";
    for (std::size_t i = 0; i < report.coarse_history.size(); ++i)
    {
        const CoarseRecord& r = report.coarse_history[i];
        out += "coarse\t" + std::to_string(i) + "\t" + fmt(r.total) + "\t" + fmt(r.components.feat) + "\t" +
               fmt(r.components.regu) + "\t" + fmt(r.components.phot) + "\t" + fmt(r.components.land) + "\n";
    }
    for (std::size_t i = 0; i < report.detail_history.size(); ++i)
        out += "detail\t" + std::to_string(i) + "\t" + fmt(report.detail_history[i]) + "\t\t\t\t\n";
    return out;
}

std::string report_summary(const FitReport& report, double landmark_rmse_px)
{
    std::string out;
    out += "coarse_iterations " + std::to_string(report.coarse_iterations) + "\n";
    out += "coarse_termination " + to_string(report.coarse_termination) + "\n";
    if (!report.coarse_history.empty())
    {
        const CoarseRecord& last = report.coarse_history.back();
        out += "final_total " + fmt(last.total) + "\n";
        out += "final_feat " + fmt(last.components.feat) + "\n";
        out += "final_regu " + fmt(last.components.regu) + "\n";
        out += "final_phot " + fmt(last.components.phot) + "\n";
        out += "final_land " + fmt(last.components.land) + "\n";
    }
    out += "landmark_rmse_px " + fmt(landmark_rmse_px) + "\n";
    out += "detail " + std::string(report.has_bump ? "yes" : "no") + "\n";
    if (report.has_bump)
    {
        out += "detail_iterations " + std::to_string(report.detail_iterations) + "\n";
        out += "detail_termination " + to_string(report.detail_termination) + "\n";
        if (!report.detail_history.empty())
            out += "final_geo " + fmt(report.detail_history.back()) + "\n";
        out += "saturated_pixels " + std::to_string(report.saturated_pixels) + "\n";
        out += "missing_target_pixels " + std::to_string(report.missing_target_pixels) + "\n";
        out += "delta_max " + fmt(report.bump.delta_max) + "\n";
    }
    return out;
}

std::string params_text(const FaceParams& p)
{
    auto vec = [](const std::string& name, const Eigen::VectorXd& v) {
        std::string s = name + " " + std::to_string(v.size());
        for (Eigen::Index i = 0; i < v.size(); ++i)
            s += " " + fmt(v[i]);
        return s + "\n";
    };
    std::string out = "lighting " + std::string(p.lighting == LightingProfile::shared ? "shared" : "per_channel") + "\n";
    out += vec("alpha_id", p.alpha_id);
    out += vec("beta_exp", p.beta_exp);
    out += vec("beta_tex", p.beta_tex);
    out += vec("gamma", Eigen::Map<const Eigen::VectorXd>(p.gamma.data(), 27));
    out += vec("pose", (Eigen::VectorXd(7) << p.pose.pitch, p.pose.yaw, p.pose.roll, p.pose.f, p.pose.t2d.x(),
                        p.pose.t2d.y(), p.pose.t2d.z())
                           .finished());
    return out;
}

FaceParams parse_params(const std::string& text, const MorphableModel& model)
{
    FaceParams p = FaceParams::zeros(model);
    std::map<std::string, Eigen::VectorXd> blocks;
    const fs::path where("params");
    std::size_t n = 0;
    for (const std::string& line : lines_of(text))
    {
        ++n;
        const auto tok = split_ws(line);
        if (tok.empty())
            continue;
        if (tok[0] == "lighting")
        {
            if (tok.size() != 2 || (tok[1] != "shared" && tok[1] != "per_channel"))
                parse_error(where, n, "lighting must be 'shared' or 'per_channel'");
            p.lighting = tok[1] == "shared" ? LightingProfile::shared : LightingProfile::per_channel;
            continue;
        }
        std::size_t count = 0;
        if (tok.size() < 2 || !parse_int(tok[1], count) || tok.size() != count + 2)
            parse_error(where, n, "expected 'name count values...'");
        Eigen::VectorXd v(static_cast<Eigen::Index>(count));
        for (std::size_t i = 0; i < count; ++i)
            if (!parse_double(tok[i + 2], v[static_cast<Eigen::Index>(i)]))
                parse_error(where, n, "invalid number");
        blocks[tok[0]] = std::move(v);
    }
    auto take = [&](const char* name, Eigen::Index size) {
        auto it = blocks.find(name);
        if (it == blocks.end())
            throw Error(ErrorCode::parse, std::string("params: missing block '") + name + "'");
        if (it->second.size() != size)
            throw_shape_error(name, static_cast<std::size_t>(size), static_cast<std::size_t>(it->second.size()));
        return it->second;
    };
    p.alpha_id = take("alpha_id", model.n_id());
    p.beta_exp = take("beta_exp", model.n_exp());
    p.beta_tex = take("beta_tex", model.n_tex());
    const Eigen::VectorXd g = take("gamma", 27);
    p.gamma = Eigen::Map<const ShMatrix>(g.data());
    const Eigen::VectorXd pose = take("pose", 7);
    p.pose = Pose{pose[0], pose[1], pose[2], pose[3], Eigen::Vector3d(pose[4], pose[5], pose[6])};
    return p;
}

} // namespace facefit
