#include "abbie/textgen.hpp"

#include <array>
#include <cctype>

#include "abbie/rng.hpp"

namespace abbie {

namespace {

const std::array<const char*, 96> kNouns = {
    "river",   "mountain", "lantern", "harbor",  "meadow",  "garden",  "letter",  "bridge",
    "forest",  "village",  "market",  "window",  "journey", "morning", "evening", "winter",
    "summer",  "teacher",  "student", "painter", "sailor",  "farmer",  "miller",  "stranger",
    "road",    "valley",   "island",  "shore",   "storm",   "harvest", "orchard", "kitchen",
    "candle",  "compass",  "map",     "song",    "story",   "stone",   "tower",   "church",
    "wagon",   "horse",    "sparrow", "falcon",  "salmon",  "willow",  "cedar",   "maple",
    "library", "workshop", "mill",    "field",   "fence",   "gate",    "path",    "cellar",
    "attic",   "chimney",  "anchor",  "sail",    "tide",    "current", "cliff",   "cavern",
    "ledger",  "bargain",  "custom",  "festival", "neighbor", "cousin", "uncle",   "aunt",
    "baker",   "smith",    "weaver",  "shepherd", "clerk",   "mayor",   "doctor",  "carpenter",
    "lamp",    "basket",   "barrel",  "rope",    "hammer",  "needle",  "thread",  "loom",
    "plough",  "saddle",   "bell",    "clock",   "coin",    "parcel",  "notebook", "satchel"};

const std::array<const char*, 64> kVerbs = {
    "carried",  "watched",   "followed", "crossed",  "repaired", "gathered", "painted",  "opened",
    "closed",   "counted",   "measured", "traded",   "planted",  "harvested", "mended",  "built",
    "visited",  "remembered", "forgot",  "described", "promised", "returned", "borrowed", "lent",
    "studied",  "taught",    "learned",  "wrote",    "read",     "sang",     "whistled", "climbed",
    "descended", "wandered",  "hurried",  "waited",   "rested",   "worked",   "argued",   "agreed",
    "greeted",  "thanked",   "warned",   "answered", "asked",    "offered",  "accepted", "refused",
    "carved",   "polished",  "weighed",  "packed",   "unpacked", "delivered", "collected", "sorted",
    "sketched", "copied",    "sealed",   "posted",   "tended",   "guarded",  "steered",  "anchored"};

const std::array<const char*, 48> kAdjectives = {
    "old",     "young",  "quiet",   "narrow", "wide",    "bright", "pale",    "heavy",
    "light",   "early",  "late",    "long",   "short",   "warm",   "cold",    "gentle",
    "steep",   "level",  "distant", "near",   "patient", "clever", "careful", "curious",
    "steady",  "sudden", "familiar", "strange", "plain",  "fine",   "rough",   "smooth",
    "crowded", "empty",  "silent",  "busy",   "golden",  "silver", "wooden",  "stone",
    "northern", "southern", "eastern", "western", "little", "great",  "honest", "weary"};

const std::array<const char*, 24> kAdverbs = {
    "slowly",    "quickly",  "carefully", "quietly",  "suddenly",  "finally",  "often",   "rarely",
    "usually",   "together", "alone",     "yesterday", "today",    "tomorrow", "upstream", "downhill",
    "patiently", "honestly", "gladly",    "calmly",   "earnestly", "steadily", "soon",     "at once"};

const std::array<const char*, 20> kNames = {
    "Anna",  "Peter", "Maria",  "Thomas", "Helen",  "Jacob", "Clara", "Martin", "Sofia", "Henrik",
    "Louisa", "Oskar", "Ingrid", "Pavel",  "Teresa", "Anders", "Greta", "Viktor", "Ruth",  "Elias"};

struct WordBank {
    const char* noun(Prng& rng) const { return kNouns[rng.uniform_int(kNouns.size())]; }
    const char* verb(Prng& rng) const { return kVerbs[rng.uniform_int(kVerbs.size())]; }
    const char* adj(Prng& rng) const { return kAdjectives[rng.uniform_int(kAdjectives.size())]; }
    const char* adv(Prng& rng) const { return kAdverbs[rng.uniform_int(kAdverbs.size())]; }
    const char* name(Prng& rng) const { return kNames[rng.uniform_int(kNames.size())]; }
};

std::string make_sentence(Prng& rng, const WordBank& w) {
    std::string s;
    switch (rng.uniform_int(10)) {
        case 0:
            s = std::string("The ") + w.adj(rng) + " " + w.noun(rng) + " " + w.verb(rng) +
                " the " + w.noun(rng) + " near the " + w.noun(rng) + ".";
            break;
        case 1:
            s = std::string(w.name(rng)) + " " + w.verb(rng) + " the " + w.adj(rng) + " " +
                w.noun(rng) + " " + w.adv(rng) + ".";
            break;
        case 2:
            s = std::string("In the ") + w.adj(rng) + " " + w.noun(rng) + ", the " + w.noun(rng) +
                " " + w.verb(rng) + " " + w.adv(rng) + ".";
            break;
        case 3:
            s = std::string(w.name(rng)) + " and " + w.name(rng) + " " + w.verb(rng) +
                " the " + w.noun(rng) + " before the " + w.noun(rng) + ".";
            break;
        case 4:
            s = std::string("A ") + w.adj(rng) + " " + w.noun(rng) + " stood beside the " +
                w.noun(rng) + " all through the " + w.noun(rng) + ".";
            break;
        case 5:
            s = std::string("When the ") + w.noun(rng) + " " + w.verb(rng) + ", " + w.name(rng) +
                " " + w.verb(rng) + " the " + w.noun(rng) + ".";
            break;
        case 6:
            s = std::string("It was a ") + w.adj(rng) + " " + w.noun(rng) + ", and the " +
                w.noun(rng) + " seemed " + w.adj(rng) + ".";
            break;
        case 7:
            s = std::string("The ") + w.noun(rng) + " of the " + w.noun(rng) + " " + w.verb(rng) +
                " " + std::to_string(2 + rng.uniform_int(98)) + " " + w.noun(rng) + "s.";
            break;
        case 8:
            s = std::string("\"") + "Bring the " + w.noun(rng) + ",\" said the " + w.adj(rng) +
                " " + w.noun(rng) + ".";
            break;
        default:
            s = std::string(w.adv(rng)) + " the " + w.noun(rng) + " " + w.verb(rng) +
                " toward the " + w.adj(rng) + " " + w.noun(rng) + ".";
            break;
    }
    if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    return s;
}

}  // namespace

std::string generate_corpus(uint64_t seed, size_t n_bytes) {
    Prng rng(seed);
    WordBank w;
    std::string out;
    out.reserve(n_bytes + 256);
    while (out.size() < n_bytes) {
        const uint64_t sentences = 3 + rng.uniform_int(6);
        for (uint64_t i = 0; i < sentences && out.size() < n_bytes; ++i) {
            out += make_sentence(rng, w);
            out += i + 1 < sentences ? " " : "";
        }
        out += "\n\n";
    }
    out.resize(n_bytes);
    return out;
}

McTask generate_mc_task(uint64_t seed, int64_t n_items, int64_t n_choices) {
    if (n_items < 1 || n_choices < 2) throw UsageError("mc task generator: need items and >= 2 choices");
    Prng rng(seed);
    WordBank w;
    McTask task;
    for (int64_t i = 0; i < n_items; ++i) {
        McItem item;
        item.context = std::string("The ") + w.adj(rng) + " " + w.noun(rng) + " " + w.verb(rng) +
                       " the " + w.noun(rng) + " and then";
        for (int64_t c = 0; c < n_choices; ++c)
            item.choices.push_back(std::string(" ") + w.verb(rng) + " the " + w.adj(rng) + " " +
                                   w.noun(rng) + ".");
        item.answer = static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(n_choices)));
        task.items.push_back(std::move(item));
    }
    return task;
}

}  // namespace abbie
