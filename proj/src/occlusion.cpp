#include "facefit/occlusion.hpp"

#include "facefit/errors.hpp"

#include <algorithm>
#include <array>

namespace facefit {

namespace {

std::vector<bool> occluder_table(const ParsingSchema& schema, const std::optional<std::set<std::string>>& occluders)
{
    const std::set<std::string> names = occluders ? *occluders : schema.default_occluders();
    std::vector<bool> table(256, false);
    for (const auto& n : names)
        table[static_cast<std::size_t>(schema.label_of(n))] = true;
    return table;
}

std::vector<bool> facial_table(const ParsingSchema& schema)
{
    std::vector<bool> table(256, false);
    for (const auto& c : schema.categories())
        table[static_cast<std::size_t>(c.index)] = c.facial;
    return table;
}

} // namespace

ParsingSchema::ParsingSchema(std::string name, std::vector<ParsingCategory> categories)
    : name_(std::move(name)), categories_(std::move(categories))
{
    std::sort(categories_.begin(), categories_.end(),
              [](const auto& a, const auto& b) { return a.index < b.index; });
    for (std::size_t i = 0; i < categories_.size(); ++i)
    {
        const auto& c = categories_[i];
        if (c.index < 0 || c.index > 255)
            throw Error(ErrorCode::schema, "label index " + std::to_string(c.index) + " outside [0, 255]");
        if (c.name.empty())
            throw Error(ErrorCode::schema, "empty category name for label " + std::to_string(c.index));
        if (i > 0 && categories_[i - 1].index == c.index)
            throw Error(ErrorCode::schema, "duplicate label index " + std::to_string(c.index));
        for (std::size_t j = 0; j < i; ++j)
            if (categories_[j].name == c.name)
                throw Error(ErrorCode::schema, "duplicate category name '" + c.name + "'");
    }
}

ParsingSchema ParsingSchema::helen11()
{
    return ParsingSchema("helen11", {{0, "background", false, false},
                                     {1, "skin", true, false},
                                     {2, "l_brow", true, false},
                                     {3, "r_brow", true, false},
                                     {4, "l_eye", true, false},
                                     {5, "r_eye", true, false},
                                     {6, "nose", true, false},
                                     {7, "u_lip", true, false},
                                     {8, "mouth", true, false},
                                     {9, "l_lip", true, false},
                                     {10, "hair", false, true}});
}

ParsingSchema ParsingSchema::celebamask19()
{
    return ParsingSchema("celebamask19", {{0, "background", false, false},
                                          {1, "skin", true, false},
                                          {2, "nose", true, false},
                                          {3, "eyeglass", false, true},
                                          {4, "l_eye", true, false},
                                          {5, "r_eye", true, false},
                                          {6, "l_brow", true, false},
                                          {7, "r_brow", true, false},
                                          {8, "l_ear", false, false},
                                          {9, "r_ear", false, false},
                                          {10, "mouth", true, false},
                                          {11, "u_lip", true, false},
                                          {12, "l_lip", true, false},
                                          {13, "hair", false, true},
                                          {14, "hat", false, true},
                                          {15, "earring", false, true},
                                          {16, "necklace", false, true},
                                          {17, "neck", false, true},
                                          {18, "cloth", false, true}});
}

ParsingSchema ParsingSchema::builtin(const std::string& name)
{
    if (name == "helen11")
        return helen11();
    if (name == "celebamask19")
        return celebamask19();
    throw Error(ErrorCode::schema, "unknown built-in schema '" + name + "' (valid: helen11, celebamask19)");
}

bool ParsingSchema::valid_label(int label) const
{
    return std::any_of(categories_.begin(), categories_.end(), [&](const auto& c) { return c.index == label; });
}

const ParsingCategory& ParsingSchema::category(int label) const
{
    for (const auto& c : categories_)
        if (c.index == label)
            return c;
    throw Error(ErrorCode::schema, "label " + std::to_string(label) + " not defined by schema '" + name_ + "'");
}

int ParsingSchema::label_of(const std::string& category_name) const
{
    for (const auto& c : categories_)
        if (c.name == category_name)
            return c.index;
    std::string valid;
    for (const auto& c : categories_)
        valid += (valid.empty() ? "" : ", ") + c.name;
    throw Error(ErrorCode::schema,
                "unknown category '" + category_name + "' in schema '" + name_ + "' (valid: " + valid + ")");
}

std::set<std::string> ParsingSchema::default_occluders() const
{
    std::set<std::string> out;
    for (const auto& c : categories_)
        if (c.default_occluder)
            out.insert(c.name);
    return out;
}

void ParsingMap::validate() const
{
    std::vector<bool> known(256, false);
    for (const auto& c : schema.categories())
        known[static_cast<std::size_t>(c.index)] = true;
    for (std::size_t i = 0; i < labels.size(); ++i)
    {
        if (!known[labels[i]])
            throw Error(ErrorCode::schema, "pixel " + std::to_string(i) + " has label " + std::to_string(labels[i]) +
                                               " not defined by schema '" + schema.name() + "'");
    }
}

Mask visibility_mask(const ParsingMap& parsing, const std::optional<std::set<std::string>>& occluders)
{
    parsing.validate();
    const auto occluding = occluder_table(parsing.schema, occluders);
    const auto facial = facial_table(parsing.schema);
    Mask mask(parsing.labels.width(), parsing.labels.height(), 0);
    for (std::size_t i = 0; i < mask.size(); ++i)
    {
        const auto label = parsing.labels[i];
        mask[i] = facial[label] && !occluding[label];
    }
    return mask;
}

ParsingMap fuse_parsing_edges(const ParsingMap& parsing, const EdgeLinesMap& edges, double edge_threshold,
                              const std::optional<std::set<std::string>>& occluders)
{
    require_same_shape(parsing.labels, edges, "fuse_parsing_edges");
    parsing.validate();
    const auto occluding = occluder_table(parsing.schema, occluders);
    const auto facial = facial_table(parsing.schema);
    const int w = parsing.labels.width(), h = parsing.labels.height();

    Mask near_edge(w, h, 0);
    for (int row = 0; row < h; ++row)
        for (int col = 0; col < w; ++col)
            for (int dr = -1; dr <= 1 && !near_edge(row, col); ++dr)
                for (int dc = -1; dc <= 1; ++dc)
                {
                    const int r = row + dr, c = col + dc;
                    if (r >= 0 && r < h && c >= 0 && c < w && edges(r, c) >= edge_threshold)
                    {
                        near_edge(row, col) = 1;
                        break;
                    }
                }

    ParsingMap current = parsing;
    for (bool changed = true; changed;)
    {
        changed = false;
        ParsingMap next = current;
        for (int row = 0; row < h; ++row)
        {
            for (int col = 0; col < w; ++col)
            {
                const auto label = current.labels(row, col);
                if (!occluding[label] || !near_edge(row, col))
                    continue;
                std::array<int, 256> votes{};
                int neighbours = 0, facial_neighbours = 0;
                for (int dr = -1; dr <= 1; ++dr)
                    for (int dc = -1; dc <= 1; ++dc)
                    {
                        const int r = row + dr, c = col + dc;
                        if ((dr == 0 && dc == 0) || r < 0 || r >= h || c < 0 || c >= w)
                            continue;
                        ++neighbours;
                        const auto n = current.labels(r, c);
                        if (facial[n] && !occluding[n])
                        {
                            ++facial_neighbours;
                            ++votes[n];
                        }
                    }
                if (2 * facial_neighbours <= neighbours)
                    continue;
                const auto best = std::max_element(votes.begin(), votes.end()); // first max = smallest label
                next.labels(row, col) = static_cast<std::uint8_t>(best - votes.begin());
                changed = true;
            }
        }
        current = std::move(next);
    }
    return current;
}

} // namespace facefit
