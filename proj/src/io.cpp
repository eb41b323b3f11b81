#include "eepi/io.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace eepi::io
{

int Table::column(const std::string& name) const
{
    for (size_t i = 0; i < header.size(); ++i)
        if (header[i] == name)
            return static_cast<int>(i);
    throw Error(ErrorCode::InvalidInput, "missing column '" + name + "'");
}

bool Table::has_column(const std::string& name) const
{
    for (const auto& h : header)
        if (h == name)
            return true;
    return false;
}

std::vector<std::string> Table::strings(const std::string& name) const
{
    const int c = column(name);
    std::vector<std::string> out;
    out.reserve(rows.size());
    for (const auto& r : rows)
        out.push_back(r[c]);
    return out;
}

std::vector<double> Table::numbers(const std::string& name) const
{
    const int c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (size_t i = 0; i < rows.size(); ++i)
    {
        try
        {
            out.push_back(parse_number(rows[i][c]));
        }
        catch (const Error& e)
        {
            throw Error(ErrorCode::InvalidInput,
                        "column '" + name + "', data row " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return out;
}

Table parse_csv(const std::string& text)
{
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false;
    bool any = false;
    for (size_t i = 0; i < text.size(); ++i)
    {
        const char c = text[i];
        if (quoted)
        {
            if (c == '"')
            {
                if (i + 1 < text.size() && text[i + 1] == '"')
                {
                    field += '"';
                    ++i;
                }
                else
                    quoted = false;
            }
            else
                field += c;
            continue;
        }
        if (c == '"')
        {
            quoted = true;
            any = true;
        }
        else if (c == ',')
        {
            record.push_back(field);
            field.clear();
            any = true;
        }
        else if (c == '\n' || c == '\r')
        {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n')
                ++i;
            if (any || !field.empty())
            {
                record.push_back(field);
                records.push_back(std::move(record));
            }
            record.clear();
            field.clear();
            any = false;
        }
        else
        {
            field += c;
            any = true;
        }
    }
    require(!quoted, "unterminated quoted field");
    if (any || !field.empty())
    {
        record.push_back(field);
        records.push_back(std::move(record));
    }
    require(!records.empty(), "empty table: header row missing");
    Table t;
    t.header = std::move(records.front());
    for (size_t i = 1; i < records.size(); ++i)
    {
        require(records[i].size() == t.header.size(),
                "row " + std::to_string(i) + " has " + std::to_string(records[i].size()) + " fields, expected " +
                    std::to_string(t.header.size()));
        t.rows.push_back(std::move(records[i]));
    }
    return t;
}

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
    out << text;
}

Table read_csv(const std::filesystem::path& path)
{
    try
    {
        return parse_csv(read_text(path));
    }
    catch (const Error& e)
    {
        if (e.code() == ErrorCode::Io)
            throw;
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

namespace
{
std::string quote(const std::string& s)
{
    if (s.find_first_of(",\"\n\r") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s)
    {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}
}  // namespace

std::string format_csv(const Table& table)
{
    std::string out;
    auto line = [&](const std::vector<std::string>& r) {
        for (size_t i = 0; i < r.size(); ++i)
        {
            if (i)
                out += ',';
            out += quote(r[i]);
        }
        out += '\n';
    };
    line(table.header);
    for (const auto& r : table.rows)
        line(r);
    return out;
}

void write_csv(const std::filesystem::path& path, const Table& table) { write_text(path, format_csv(table)); }

double parse_number(const std::string& field)
{
    size_t b = field.find_first_not_of(" \t");
    size_t e = field.find_last_not_of(" \t");
    require(b != std::string::npos, "empty numeric field");
    const std::string s = field.substr(b, e - b + 1);
    if (s == "Inf" || s == "inf" || s == "+Inf")
        return kInf;
    if (s == "-Inf" || s == "-inf")
        return -kInf;
    if (s == "NA" || s == "NaN" || s == "nan")
        return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const char* first = s.data();
    if (*first == '+')
        ++first;
    auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    require(ec == std::errc() && ptr == s.data() + s.size(), "not a number: '" + s + "'");
    return v;
}

std::string format_number(double value)
{
    if (std::isinf(value))
        return value > 0 ? "Inf" : "-Inf";
    if (std::isnan(value))
        return "NaN";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

std::pair<std::vector<std::string>, Matrix> read_counts(const std::filesystem::path& path)
{
    const Table t = read_csv(path);
    Matrix m(t.rows.size(), t.header.size());
    for (size_t i = 0; i < t.rows.size(); ++i)
        for (size_t j = 0; j < t.header.size(); ++j)
            m(i, j) = parse_number(t.rows[i][j]);
    return {t.header, m};
}

void write_counts(const std::filesystem::path& path, const std::vector<std::string>& unitIds, const Matrix& counts)
{
    Table t;
    t.header = unitIds;
    for (int i = 0; i < counts.rows(); ++i)
    {
        std::vector<std::string> r;
        for (int j = 0; j < counts.cols(); ++j)
            r.push_back(format_number(counts(i, j)));
        t.rows.push_back(std::move(r));
    }
    write_csv(path, t);
}

namespace
{
Ring ring_from_json(const nlohmann::json& coords)
{
    Ring r;
    for (const auto& p : coords)
    {
        require(p.is_array() && p.size() >= 2, "GeoJSON position must have two coordinates");
        r.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    return r;
}

void add_polygon(PolygonSet& ps, const nlohmann::json& poly)
{
    for (size_t k = 0; k < poly.size(); ++k)
        ps.add_ring(ring_from_json(poly[k]), k > 0);
}
}  // namespace

std::vector<Feature> parse_geojson(const std::string& text)
{
    nlohmann::json doc;
    try
    {
        doc = nlohmann::json::parse(text);
    }
    catch (const nlohmann::json::exception& e)
    {
        throw Error(ErrorCode::InvalidInput, std::string("malformed GeoJSON: ") + e.what());
    }
    require(doc.value("type", "") == "FeatureCollection", "GeoJSON root must be a FeatureCollection");
    std::vector<Feature> out;
    for (const auto& f : doc.at("features"))
    {
        Feature feat;
        const nlohmann::json* id = nullptr;
        if (f.contains("properties") && f["properties"].is_object() && f["properties"].contains("id"))
            id = &f["properties"]["id"];
        else if (f.contains("id"))
            id = &f["id"];
        require(id != nullptr, "GeoJSON feature lacks an \"id\" property");
        feat.id = id->is_string() ? id->get<std::string>() : id->dump();
        const auto& g = f.at("geometry");
        const std::string type = g.at("type").get<std::string>();
        if (type == "Polygon")
            add_polygon(feat.geometry, g.at("coordinates"));
        else if (type == "MultiPolygon")
            for (const auto& poly : g.at("coordinates"))
                add_polygon(feat.geometry, poly);
        else
            throw Error(ErrorCode::InvalidInput, "unsupported GeoJSON geometry type '" + type + "'");
        out.push_back(std::move(feat));
    }
    return out;
}

std::vector<Feature> read_geojson(const std::filesystem::path& path)
{
    try
    {
        return parse_geojson(read_text(path));
    }
    catch (const Error& e)
    {
        if (e.code() == ErrorCode::Io)
            throw;
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

PolygonSet merge_features(const std::vector<Feature>& features)
{
    PolygonSet out;
    for (const auto& f : features)
        for (size_t i = 0; i < f.geometry.rings.size(); ++i)
        {
            out.rings.push_back(f.geometry.rings[i]);
            out.isHole.push_back(f.geometry.isHole[i]);
        }
    out.update_bbox();
    return out;
}

BoolMatrix parse_adjacency(const std::string& text, const std::vector<std::string>& unitIds)
{
    std::map<std::string, int> index;
    for (size_t i = 0; i < unitIds.size(); ++i)
        index[unitIds[i]] = static_cast<int>(i);
    const int n = static_cast<int>(unitIds.size());
    BoolMatrix adj = BoolMatrix::Constant(n, n, false);
    std::istringstream in(text);
    std::string line;
    int lineNo = 0;
    auto trim = [](std::string s) {
        const size_t b = s.find_first_not_of(" \t\r");
        const size_t e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line))
    {
        ++lineNo;
        line = trim(line);
        if (line.empty() || line[0] == '#')
            continue;
        const size_t comma = line.find(',');
        require(comma != std::string::npos, "adjacency line " + std::to_string(lineNo) + " is not 'idA,idB'");
        const std::string a = trim(line.substr(0, comma));
        const std::string b = trim(line.substr(comma + 1));
        auto ia = index.find(a);
        auto ib = index.find(b);
        require(ia != index.end(), "adjacency refers to unknown unit '" + a + "'");
        require(ib != index.end(), "adjacency refers to unknown unit '" + b + "'");
        if (ia->second == ib->second)
            continue;
        adj(ia->second, ib->second) = true;
        adj(ib->second, ia->second) = true;
    }
    return adj;
}

BoolMatrix read_adjacency(const std::filesystem::path& path, const std::vector<std::string>& unitIds)
{
    return parse_adjacency(read_text(path), unitIds);
}

}  // namespace eepi::io
