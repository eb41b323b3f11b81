#pragma once

#include "eepi/geometry.hpp"
#include "eepi/types.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace eepi::io
{

struct Table
{
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of a column; throws naming the column when absent.
    int column(const std::string& name) const;
    bool has_column(const std::string& name) const;
    std::vector<std::string> strings(const std::string& name) const;
    std::vector<double> numbers(const std::string& name) const;
};

/// Comma-separated text with a header row; double quotes enclose fields.
Table parse_csv(const std::string& text);
Table read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const Table& table);
std::string format_csv(const Table& table);

double parse_number(const std::string& field);
std::string format_number(double value);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Counts grid: header of unit ids, one row per time point.
std::pair<std::vector<std::string>, Matrix> read_counts(const std::filesystem::path& path);
void write_counts(const std::filesystem::path& path, const std::vector<std::string>& unitIds, const Matrix& counts);

struct Feature
{
    std::string id;
    PolygonSet geometry;
};
/// GeoJSON FeatureCollection of Polygon/MultiPolygon features with an "id" property.
std::vector<Feature> parse_geojson(const std::string& text);
std::vector<Feature> read_geojson(const std::filesystem::path& path);
/// Union of all features as one polygon set (features assumed disjoint).
PolygonSet merge_features(const std::vector<Feature>& features);

/// Edge list "idA,idB" per line, symmetrised; unknown ids are an error.
BoolMatrix read_adjacency(const std::filesystem::path& path, const std::vector<std::string>& unitIds);
BoolMatrix parse_adjacency(const std::string& text, const std::vector<std::string>& unitIds);

}  // namespace eepi::io
