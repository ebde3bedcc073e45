#include "bulletcmp/scan_io.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "zip_reader.hpp"

namespace bulletcmp {

namespace pt = boost::property_tree;

HeightField::HeightField(std::size_t cols, std::size_t rows, double xinc, double yinc)
    : n_cols(cols), n_rows(rows), x_inc(xinc), y_inc(yinc), heights(cols * rows, 0.0), mask(cols * rows, 1) {}

std::size_t HeightField::measured_count() const {
    std::size_t n = 0;
    for (auto m : mask) n += m != 0;
    return n;
}

double HeightField::measured_fraction() const {
    return mask.empty() ? 0.0 : static_cast<double>(measured_count()) / static_cast<double>(mask.size());
}

void HeightField::check() const {
    if (heights.size() != n_cols * n_rows || mask.size() != heights.size())
        throw std::invalid_argument("height field storage does not match its dimensions");
    if (!(x_inc > 0) || !(y_inc > 0)) throw std::invalid_argument("height field increments must be positive");
    for (std::size_t i = 0; i < heights.size(); ++i)
        if (mask[i] && !std::isfinite(heights[i]))
            throw std::invalid_argument("measured cell " + std::to_string(i) + " is not finite");
}

// ---- x3p ---------------------------------------------------------------

namespace {

std::string trimmed(std::string s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

double parse_double(std::string_view text, const std::string& field) {
    double v = 0;
    const char* b = text.data();
    const char* e = text.data() + text.size();
    if (b != e && *b == '+') ++b;
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc{} || p != e) throw ScanFormatError(field, "not a number: '" + std::string(text) + "'");
    return v;
}

long long parse_integer(std::string_view text, const std::string& field) {
    long long v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || p != text.data() + text.size())
        throw ScanFormatError(field, "not an integer: '" + std::string(text) + "'");
    return v;
}

const pt::ptree& child(const pt::ptree& node, const std::string& path, const std::string& field) {
    auto c = node.get_child_optional(path);
    if (!c) throw ScanFormatError(field, "missing");
    return *c;
}

std::string text_of(const pt::ptree& node, const std::string& path, const std::string& field) {
    return trimmed(child(node, path, field).data());
}

// The root element carries a namespace prefix (commonly "p:ISO5436_2").
const pt::ptree& x3p_root(const pt::ptree& doc) {
    for (const auto& [name, node] : doc) {
        if (name == "ISO5436_2" || (name.size() > 10 && name.ends_with(":ISO5436_2"))) return node;
    }
    throw ScanFormatError("ISO5436_2", "root element missing from main.xml");
}

void flatten(const pt::ptree& node, const std::string& prefix, std::map<std::string, std::string>& out) {
    for (const auto& [name, c] : node) {
        if (name == "<xmlattr>" || name == "<xmlcomment>") continue;
        const std::string key = prefix.empty() ? name : prefix + "." + name;
        if (c.empty()) {
            out[key] = trimmed(c.data());
        } else {
            flatten(c, key, out);
        }
    }
}

}  // namespace

X3pScan read_x3p(std::span<const std::uint8_t> bytes) {
    detail::ZipReader zip(bytes);
    const auto* main_member = zip.find("main.xml");
    if (!main_member) throw ScanFormatError("main.xml", "not present in container");
    const auto xml_bytes = zip.extract(*main_member);

    pt::ptree doc;
    {
        std::istringstream in(std::string(xml_bytes.begin(), xml_bytes.end()));
        try {
            pt::read_xml(in, doc);
        } catch (const pt::xml_parser_error& e) {
            throw ScanFormatError("main.xml", std::string("malformed XML: ") + e.message());
        }
    }
    const auto& root = x3p_root(doc);

    const auto size_x = parse_integer(text_of(root, "Record3.MatrixDimension.SizeX", "SizeX"), "SizeX");
    const auto size_y = parse_integer(text_of(root, "Record3.MatrixDimension.SizeY", "SizeY"), "SizeY");
    long long size_z = 1;
    if (auto z = root.get_optional<std::string>("Record3.MatrixDimension.SizeZ"))
        size_z = parse_integer(trimmed(*z), "SizeZ");
    if (size_x <= 0) throw ScanFormatError("SizeX", "must be positive");
    if (size_y <= 0) throw ScanFormatError("SizeY", "must be positive");
    if (size_z != 1) throw ScanFormatError("SizeZ", "only single-layer matrices are supported");

    const double x_inc_m = parse_double(text_of(root, "Record1.Axes.CX.Increment", "CX.Increment"), "CX.Increment");
    const double y_inc_m = parse_double(text_of(root, "Record1.Axes.CY.Increment", "CY.Increment"), "CY.Increment");
    if (!(x_inc_m > 0)) throw ScanFormatError("CX.Increment", "must be positive");
    if (!(y_inc_m > 0)) throw ScanFormatError("CY.Increment", "must be positive");

    const std::string dtype = text_of(root, "Record1.Axes.CZ.DataType", "CZ.DataType");
    std::size_t value_size = 0;
    if (dtype == "D") {
        value_size = 8;
    } else if (dtype == "F") {
        value_size = 4;
    } else {
        throw ScanFormatError("CZ.DataType", "unsupported datatype '" + dtype + "' (expected F or D)");
    }
    double z_scale = 1.0;
    if (auto inc = root.get_optional<std::string>("Record1.Axes.CZ.Increment"))
        z_scale = parse_double(trimmed(*inc), "CZ.Increment");

    const std::string link = text_of(root, "Record3.DataLink.PointDataLink", "PointDataLink");
    const auto* data_member = zip.find(link);
    if (!data_member) throw ScanFormatError("PointDataLink", "member '" + link + "' not present in container");
    const auto payload = zip.extract(*data_member);

    const auto cells = static_cast<std::size_t>(size_x) * static_cast<std::size_t>(size_y);
    if (payload.size() != cells * value_size) {
        throw ScanFormatError("MatrixDimension",
                              "declared " + std::to_string(size_x) + "x" + std::to_string(size_y) + " grid needs " +
                                  std::to_string(cells * value_size) + " bytes of " + dtype + " data, payload has " +
                                  std::to_string(payload.size()));
    }

    X3pScan scan;
    auto& f = scan.field;
    f = HeightField(static_cast<std::size_t>(size_x), static_cast<std::size_t>(size_y), x_inc_m * 1e6, y_inc_m * 1e6);
    static_assert(std::endian::native == std::endian::little, "x3p payload decoding assumes a little-endian host");
    for (std::size_t i = 0; i < cells; ++i) {
        double v;
        if (value_size == 8) {
            std::memcpy(&v, payload.data() + i * 8, 8);
        } else {
            float fv;
            std::memcpy(&fv, payload.data() + i * 4, 4);
            v = fv;
        }
        if (std::isfinite(v)) {
            f.heights[i] = v * z_scale * 1e6;
        } else {
            f.heights[i] = 0.0;
            f.mask[i] = 0;
        }
    }

    flatten(root, "", scan.metadata);
    return scan;
}

X3pScan read_x3p_file(const std::string& path) {
    const auto bytes = read_binary_file(path);
    return read_x3p(bytes);
}

// ---- grid csv ----------------------------------------------------------

HeightField read_grid_csv(std::string_view text) {
    std::vector<std::string_view> lines;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        auto line = text.substr(0, nl);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        if (nl == std::string_view::npos) break;
        text.remove_prefix(nl + 1);
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.empty()) throw ScanFormatError("header", "missing");

    double x_inc = 0, y_inc = 0;
    bool have_x = false, have_y = false;
    {
        std::string_view header = lines.front();
        while (!header.empty()) {
            const auto comma = header.find(',');
            const auto item = header.substr(0, comma);
            const auto eq = item.find('=');
            if (eq == std::string_view::npos) throw ScanFormatError("header", "expected key=value, got '" + std::string(item) + "'");
            const auto key = item.substr(0, eq);
            const auto value = item.substr(eq + 1);
            if (key == "x_inc") {
                x_inc = parse_double(value, "x_inc");
                have_x = true;
            } else if (key == "y_inc") {
                y_inc = parse_double(value, "y_inc");
                have_y = true;
            }
            if (comma == std::string_view::npos) break;
            header.remove_prefix(comma + 1);
        }
    }
    if (!have_x || !have_y) throw ScanFormatError("header", "missing x_inc/y_inc header");
    if (!(x_inc > 0) || !(y_inc > 0)) throw ScanFormatError("header", "increments must be positive");

    HeightField f;
    f.x_inc = x_inc;
    f.y_inc = y_inc;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const std::string where = "line " + std::to_string(li + 1);
        std::string_view line = lines[li];
        std::size_t cols = 0;
        while (true) {
            const auto comma = line.find(',');
            const auto cell = line.substr(0, comma);
            if (cell.empty()) {
                f.heights.push_back(0.0);
                f.mask.push_back(0);
            } else {
                const double v = parse_double(cell, where);
                if (!std::isfinite(v)) throw ScanFormatError(where, "non-finite value");
                f.heights.push_back(v);
                f.mask.push_back(1);
            }
            ++cols;
            if (comma == std::string_view::npos) break;
            line.remove_prefix(comma + 1);
        }
        if (li == 1) {
            f.n_cols = cols;
        } else if (cols != f.n_cols) {
            throw ScanFormatError(where, "ragged row: " + std::to_string(cols) + " cells, expected " + std::to_string(f.n_cols));
        }
        ++f.n_rows;
    }
    return f;
}

namespace {
void append_number(std::string& out, double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, p);
}
}  // namespace

std::string write_grid_csv(const HeightField& field) {
    std::string out = "x_inc=";
    append_number(out, field.x_inc);
    out += ",y_inc=";
    append_number(out, field.y_inc);
    out += '\n';
    for (std::size_t r = 0; r < field.n_rows; ++r) {
        for (std::size_t c = 0; c < field.n_cols; ++c) {
            if (c) out += ',';
            if (field.measured(r, c)) append_number(out, field.at(r, c));
        }
        out += '\n';
    }
    return out;
}

// ---- downsample / validate ---------------------------------------------

HeightField downsample(const HeightField& field, int factor) {
    if (factor <= 0) throw std::invalid_argument("downsample factor must be positive");
    if (factor == 1) return field;
    const auto k = static_cast<std::size_t>(factor);
    HeightField out((field.n_cols + k - 1) / k, (field.n_rows + k - 1) / k, field.x_inc * factor, field.y_inc * factor);
    for (std::size_t r = 0; r < out.n_rows; ++r) {
        for (std::size_t c = 0; c < out.n_cols; ++c) {
            double sum = 0;
            std::size_t n = 0;
            for (std::size_t rr = r * k; rr < std::min(field.n_rows, (r + 1) * k); ++rr)
                for (std::size_t cc = c * k; cc < std::min(field.n_cols, (c + 1) * k); ++cc)
                    if (field.measured(rr, cc)) {
                        sum += field.at(rr, cc);
                        ++n;
                    }
            const auto idx = r * out.n_cols + c;
            out.heights[idx] = n ? sum / static_cast<double>(n) : 0.0;
            out.mask[idx] = n ? 1 : 0;
        }
    }
    return out;
}

std::optional<std::string> validate(const ScanRecord& record, const ValidationLimits& limits) {
    const auto& f = record.field;
    if (f.n_cols < limits.min_cols || f.n_rows < limits.min_rows) {
        return "scan is " + std::to_string(f.n_cols) + "x" + std::to_string(f.n_rows) + ", below the minimum " +
               std::to_string(limits.min_cols) + "x" + std::to_string(limits.min_rows);
    }
    const double frac = f.measured_fraction();
    if (frac < limits.min_measured_fraction) {
        std::ostringstream msg;
        msg << "measured fraction " << frac << " below threshold " << limits.min_measured_fraction;
        return msg.str();
    }
    return std::nullopt;
}

ScanRecord load_scan(const std::string& path, const ScanMeta& meta) {
    ScanRecord rec;
    rec.meta = meta;
    rec.meta.source_path = path;
    const auto ext = std::filesystem::path(path).extension().string();
    if (ext == ".x3p") {
        auto scan = read_x3p_file(path);
        rec.field = std::move(scan.field);
        rec.provenance = std::move(scan.metadata);
    } else if (ext == ".csv") {
        rec.field = read_grid_csv(read_file(path));
    } else {
        throw ScanFormatError(path, "unknown scan file extension '" + ext + "'");
    }
    return rec;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::uint8_t> read_binary_file(const std::string& path) {
    const auto s = read_file(path);
    return {s.begin(), s.end()};
}

}  // namespace bulletcmp
