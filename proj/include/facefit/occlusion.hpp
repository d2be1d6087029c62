#pragma once

#include "facefit/edge_effectiveness.hpp"
#include "facefit/image.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace facefit {

struct ParsingCategory
{
    int index = 0;
    std::string name;
    bool facial = false;           // part of the visible facial surface
    bool default_occluder = false; // excluded unless an explicit occluder set is given
};

/// Label schema of a parsing map: integer label -> category.
class ParsingSchema
{
public:
    ParsingSchema() = default;
    ParsingSchema(std::string name, std::vector<ParsingCategory> categories);

    /// Helen: 11 categories, hair is the default occluder.
    static ParsingSchema helen11();
    /// CelebAMask-HQ: 19 categories including eyeglass and accessories.
    static ParsingSchema celebamask19();
    /// Built-in schema by name ("helen11" / "celebamask19"); Error(schema) otherwise.
    static ParsingSchema builtin(const std::string& name);

    const std::string& name() const noexcept { return name_; }
    const std::vector<ParsingCategory>& categories() const noexcept { return categories_; }

    bool valid_label(int label) const;
    const ParsingCategory& category(int label) const;
    /// Label index of a category name; Error(schema) listing valid names when unknown.
    int label_of(const std::string& category_name) const;
    std::set<std::string> default_occluders() const;

private:
    std::string name_;
    std::vector<ParsingCategory> categories_; // sorted by index
};

struct ParsingMap
{
    Grid<std::uint8_t> labels;
    ParsingSchema schema;

    /// Throws Error(schema) on the first label the schema does not define.
    void validate() const;
};

/// Visible iff the category is facial and not in `occluders` (defaults to
/// the schema's default occluder set). Unknown names raise Error(schema).
Mask visibility_mask(const ParsingMap& parsing, const std::optional<std::set<std::string>>& occluders = std::nullopt);

/**
 * Final parsing map: occluder-labelled pixels within one pixel of a strong
 * edge (value >= edge_threshold) whose 8-neighbourhood is majority facial
 * get the most frequent facial neighbour label (ties to the smaller index).
 * Applied until no pixel changes, so the result is a fixed point.
 */
ParsingMap fuse_parsing_edges(const ParsingMap& parsing, const EdgeLinesMap& edges, double edge_threshold,
                              const std::optional<std::set<std::string>>& occluders = std::nullopt);

} // namespace facefit
