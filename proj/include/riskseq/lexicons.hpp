// SPDX-License-Identifier: Apache-2.0
/**
 * @file   lexicons.hpp
 * @brief  Built-in word lists: the default emotion lexicon, gambling-topic
 *         vocabulary and neutral filler used by the synthetic generator.
 *
 * The three lists are disjoint; tests rely on that.
 */
#pragma once

#include <array>
#include <string_view>

namespace riskseq::lexicons {

inline constexpr std::array<std::string_view, 7> kEmotionNames = {
    "anger", "disgust", "fear", "joy", "neutral", "sadness", "surprise"};

inline constexpr std::size_t kAnger = 0;
inline constexpr std::size_t kDisgust = 1;
inline constexpr std::size_t kFear = 2;
inline constexpr std::size_t kJoy = 3;
inline constexpr std::size_t kNeutral = 4;
inline constexpr std::size_t kSadness = 5;
inline constexpr std::size_t kSurprise = 6;

struct EmotionWord {
  std::string_view token;
  std::size_t emotion;
};

inline constexpr EmotionWord kEmotionWords[] = {
    {"angry", kAnger},      {"furious", kAnger},     {"rage", kAnger},
    {"hate", kAnger},       {"annoyed", kAnger},     {"mad", kAnger},
    {"irritated", kAnger},  {"livid", kAnger},
    {"disgusting", kDisgust}, {"gross", kDisgust},   {"revolting", kDisgust},
    {"ashamed", kDisgust},  {"sickening", kDisgust}, {"nasty", kDisgust},
    {"repulsive", kDisgust}, {"vile", kDisgust},
    {"afraid", kFear},      {"scared", kFear},       {"anxious", kFear},
    {"panic", kFear},       {"terrified", kFear},    {"worried", kFear},
    {"nervous", kFear},     {"dread", kFear},
    {"happy", kJoy},        {"glad", kJoy},          {"excited", kJoy},
    {"great", kJoy},        {"awesome", kJoy},       {"love", kJoy},
    {"fun", kJoy},          {"cheerful", kJoy},
    {"okay", kNeutral},     {"fine", kNeutral},      {"usual", kNeutral},
    {"normal", kNeutral},   {"ordinary", kNeutral},  {"routine", kNeutral},
    {"plain", kNeutral},    {"average", kNeutral},
    {"sad", kSadness},      {"depressed", kSadness}, {"hopeless", kSadness},
    {"miserable", kSadness}, {"lonely", kSadness},   {"guilt", kSadness},
    {"regret", kSadness},   {"crying", kSadness},
    {"surprised", kSurprise}, {"shocked", kSurprise}, {"unexpected", kSurprise},
    {"amazed", kSurprise},  {"astonished", kSurprise}, {"sudden", kSurprise},
    {"stunned", kSurprise}, {"wow", kSurprise},
};

inline constexpr std::string_view kGamblingWords[] = {
    "bet",      "betting",  "casino",   "slots",     "poker",    "jackpot",
    "wager",    "roulette", "blackjack", "bookie",   "parlay",   "odds",
    "gamble",   "gambling", "chips",    "sportsbook", "payout",  "spins",
    "lottery",  "scratchers", "losses", "chasing",   "debt",     "loan",
    "deposit",  "withdrawal", "bankroll", "stake",   "dealer",   "racetrack",
};

inline constexpr std::string_view kFillerWords[] = {
    "the",     "a",       "and",     "to",      "of",      "in",      "it",
    "is",      "that",    "for",     "on",      "with",    "was",     "my",
    "this",    "but",     "have",    "just",    "so",      "not",     "be",
    "at",      "you",     "all",     "what",    "about",   "like",    "out",
    "if",      "they",    "get",     "can",     "one",     "time",    "would",
    "there",   "up",      "people",  "more",    "when",    "know",    "think",
    "work",    "day",     "good",    "really",  "going",   "been",    "some",
    "week",    "new",     "game",    "movie",   "food",    "car",     "house",
    "job",     "friend",  "family",  "dog",     "cat",     "music",   "book",
    "phone",   "today",   "night",   "morning", "weekend", "school",  "city",
    "weather", "coffee",  "dinner",  "lunch",   "breakfast", "team",  "season",
    "show",    "episode", "recipe",  "garden",  "trip",    "beach",   "park",
    "computer", "code",   "project", "meeting", "office",  "store",   "price",
    "bike",    "run",     "gym",     "sleep",   "video",   "picture", "song",
    "band",    "concert", "ticket",  "train",   "bus",     "road",    "street",
    "kitchen", "room",    "window",  "door",    "table",   "chair",   "shirt",
    "shoes",   "rain",    "snow",    "summer",  "winter",  "spring",  "autumn",
    "question", "answer", "thread",  "post",    "comment", "reddit",  "update",
    "story",   "idea",    "plan",    "list",    "thing",   "place",   "year",
    "month",   "hour",    "minute",  "water",   "tea",     "pizza",   "bread",
    "plant",   "tree",    "river",   "mountain", "lake",   "camera",  "laptop",
    "keyboard", "screen", "build",   "fix",     "clean",   "cook",    "read",
    "write",   "watch",   "play",    "walk",    "drive",   "visit",   "call",
};

} // namespace riskseq::lexicons
