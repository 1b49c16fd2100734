#include <array>
#include <unordered_map>

#include "benchup/util.hpp"
#include "benchup/validators.hpp"

namespace benchup {

namespace {

// name, symbol, atomic number; canonical IUPAC spellings.
constexpr std::array<std::pair<const char*, const char*>, 118> kElements = {{
    {"hydrogen", "H"},      {"helium", "He"},       {"lithium", "Li"},
    {"beryllium", "Be"},    {"boron", "B"},         {"carbon", "C"},
    {"nitrogen", "N"},      {"oxygen", "O"},        {"fluorine", "F"},
    {"neon", "Ne"},         {"sodium", "Na"},       {"magnesium", "Mg"},
    {"aluminium", "Al"},    {"silicon", "Si"},      {"phosphorus", "P"},
    {"sulfur", "S"},        {"chlorine", "Cl"},     {"argon", "Ar"},
    {"potassium", "K"},     {"calcium", "Ca"},      {"scandium", "Sc"},
    {"titanium", "Ti"},     {"vanadium", "V"},      {"chromium", "Cr"},
    {"manganese", "Mn"},    {"iron", "Fe"},         {"cobalt", "Co"},
    {"nickel", "Ni"},       {"copper", "Cu"},       {"zinc", "Zn"},
    {"gallium", "Ga"},      {"germanium", "Ge"},    {"arsenic", "As"},
    {"selenium", "Se"},     {"bromine", "Br"},      {"krypton", "Kr"},
    {"rubidium", "Rb"},     {"strontium", "Sr"},    {"yttrium", "Y"},
    {"zirconium", "Zr"},    {"niobium", "Nb"},      {"molybdenum", "Mo"},
    {"technetium", "Tc"},   {"ruthenium", "Ru"},    {"rhodium", "Rh"},
    {"palladium", "Pd"},    {"silver", "Ag"},       {"cadmium", "Cd"},
    {"indium", "In"},       {"tin", "Sn"},          {"antimony", "Sb"},
    {"tellurium", "Te"},    {"iodine", "I"},        {"xenon", "Xe"},
    {"caesium", "Cs"},      {"barium", "Ba"},       {"lanthanum", "La"},
    {"cerium", "Ce"},       {"praseodymium", "Pr"}, {"neodymium", "Nd"},
    {"promethium", "Pm"},   {"samarium", "Sm"},     {"europium", "Eu"},
    {"gadolinium", "Gd"},   {"terbium", "Tb"},      {"dysprosium", "Dy"},
    {"holmium", "Ho"},      {"erbium", "Er"},       {"thulium", "Tm"},
    {"ytterbium", "Yb"},    {"lutetium", "Lu"},     {"hafnium", "Hf"},
    {"tantalum", "Ta"},     {"tungsten", "W"},      {"rhenium", "Re"},
    {"osmium", "Os"},       {"iridium", "Ir"},      {"platinum", "Pt"},
    {"gold", "Au"},         {"mercury", "Hg"},      {"thallium", "Tl"},
    {"lead", "Pb"},         {"bismuth", "Bi"},      {"polonium", "Po"},
    {"astatine", "At"},     {"radon", "Rn"},        {"francium", "Fr"},
    {"radium", "Ra"},       {"actinium", "Ac"},     {"thorium", "Th"},
    {"protactinium", "Pa"}, {"uranium", "U"},       {"neptunium", "Np"},
    {"plutonium", "Pu"},    {"americium", "Am"},    {"curium", "Cm"},
    {"berkelium", "Bk"},    {"californium", "Cf"},  {"einsteinium", "Es"},
    {"fermium", "Fm"},      {"mendelevium", "Md"},  {"nobelium", "No"},
    {"lawrencium", "Lr"},   {"rutherfordium", "Rf"},{"dubnium", "Db"},
    {"seaborgium", "Sg"},   {"bohrium", "Bh"},      {"hassium", "Hs"},
    {"meitnerium", "Mt"},   {"darmstadtium", "Ds"}, {"roentgenium", "Rg"},
    {"copernicium", "Cn"},  {"nihonium", "Nh"},     {"flerovium", "Fl"},
    {"moscovium", "Mc"},    {"livermorium", "Lv"},  {"tennessine", "Ts"},
    {"oganesson", "Og"},
}};

// Accepted spelling variants, mapped to canonical names.
constexpr std::array<std::pair<const char*, const char*>, 4> kAliases = {{
    {"aluminum", "aluminium"},
    {"cesium", "caesium"},
    {"sulphur", "sulfur"},
    {"wolfram", "tungsten"},
}};

}  // namespace

struct PeriodicTable::Impl {
    std::vector<ElementInfo> elements;
    std::unordered_map<std::string, int> by_name;
};

PeriodicTable::PeriodicTable() {
    auto impl = std::make_shared<Impl>();
    impl->elements.reserve(kElements.size());
    for (std::size_t i = 0; i < kElements.size(); ++i) {
        const int number = static_cast<int>(i) + 1;
        impl->elements.push_back({kElements[i].first, kElements[i].second, number});
        impl->by_name.emplace(kElements[i].first, number);
    }
    for (const auto& [variant, canonical] : kAliases) {
        impl->by_name.emplace(variant, impl->by_name.at(canonical));
    }
    impl_ = std::move(impl);
}

const PeriodicTable& PeriodicTable::instance() {
    static const PeriodicTable table;
    return table;
}

std::optional<int> PeriodicTable::atomic_number(std::string_view name) const {
    const std::string key = to_lower(trim(name));
    auto it = impl_->by_name.find(key);
    if (it == impl_->by_name.end()) return std::nullopt;
    return it->second;
}

std::optional<std::string> PeriodicTable::name_of(int atomic_number) const {
    if (atomic_number < 1 || atomic_number > static_cast<int>(impl_->elements.size())) {
        return std::nullopt;
    }
    return impl_->elements[static_cast<std::size_t>(atomic_number - 1)].name;
}

const std::vector<ElementInfo>& PeriodicTable::elements() const { return impl_->elements; }

}  // namespace benchup
