#include "clustfolio/errors.hpp"

#include <fmt/format.h>

#include <utility>

namespace clustfolio {

MissingData::MissingData(std::size_t row, std::size_t col)
    : Error(fmt::format("missing value at data row {}, column {}", row, col)), row_(row), col_(col) {}

IsolatedVertex::IsolatedVertex(std::size_t vertex)
    : Error(fmt::format("vertex {} has zero degree in the affinity graph", vertex)), vertex_(vertex) {}

MetadataMissing::MetadataMissing(std::string ticker)
    : Error(fmt::format("no industry metadata for ticker '{}'", ticker)), ticker_(std::move(ticker)) {}

}  // namespace clustfolio
