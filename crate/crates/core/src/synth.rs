//! Seeded generator of registry records and sectioned articles with known
//! gold ages, for end-to-end runs without access to real data.
//!
//! Articles mix factual age statements in several phrasings with eligibility
//! (speculative) sentences, unrelated ages in the introduction, decimal
//! summary statistics and keyword sentences that carry no age.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{DocumentRecord, SectionKind, SectionRecord};
use crate::eval::GoldAnnotation;
use crate::supervision::RegistryRecordInput;

pub const DEFAULT_RECORDS: usize = 2400;
pub const DEFAULT_ARTICLES: usize = 20;

const POPULATIONS: [&str; 10] = [
    "smokers",
    "adults",
    "outpatients",
    "volunteers",
    "students",
    "women",
    "veterans",
    "patients",
    "drinkers",
    "employees",
];

const CONDITIONS: [&str; 10] = [
    "nicotine dependence",
    "type 2 diabetes",
    "major depression",
    "hypertension",
    "chronic low back pain",
    "asthma",
    "alcohol use disorder",
    "obesity",
    "insomnia",
    "heart failure",
];

const INTERVENTIONS: [&str; 8] = [
    "a brief office intervention",
    "a text messaging program",
    "varenicline",
    "nicotine patch therapy",
    "cognitive behavioural therapy",
    "a web-based coaching program",
    "motivational interviewing",
    "a structured exercise program",
];

const OTHER_CRITERIA: [&str; 14] = [
    "Able to provide written informed consent.",
    "Pregnant or breastfeeding women.",
    "Current use of any investigational drug.",
    "Body mass index between 18.5 and 35.0 kg/m2.",
    "History of myocardial infarction within the past 6 months.",
    "Smoking at least 10 cigarettes per day.",
    "Unstable psychiatric illness.",
    "Diagnosis confirmed by a study physician.",
    "Willing to set a quit date within 2 weeks.",
    "Fluent in English or Spanish.",
    "Known allergy to the study medication.",
    "Participation in another trial within 30 days.",
    "Systolic blood pressure above 160 mmHg.",
    "Access to a mobile telephone.",
];

const DESCRIPTIONS: [&str; 16] = [
    "This study evaluates {int} for {cond}.",
    "The primary outcome is biochemically verified abstinence at six months.",
    "Participants will be randomized to {int} or usual care.",
    "Secondary outcomes include quality of life and treatment adherence.",
    "The trial is conducted at {n} primary care clinics.",
    "Data will be analysed on an intention to treat basis.",
    "We hypothesize that {int} will reduce symptoms of {cond}.",
    "Adverse events will be recorded at every visit.",
    "A total of {n} participants will be enrolled.",
    "Blood samples are collected at baseline and at week 12.",
    "The intervention is delivered by trained nurses.",
    "Cost effectiveness will be assessed alongside the trial.",
    "Follow-up visits take place every four weeks.",
    "This pilot study examines the feasibility of {int}.",
    "Outcomes are compared with a wait-list control group.",
    "Recruitment uses flyers and online advertisements.",
];

fn fill(template: &str, rng: &mut ChaCha8Rng) -> String {
    template
        .replace("{int}", INTERVENTIONS.choose(rng).unwrap())
        .replace("{cond}", CONDITIONS.choose(rng).unwrap())
        .replace("{pop}", POPULATIONS.choose(rng).unwrap())
        .replace("{n}", &rng.gen_range(20..400).to_string())
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next().map_or_else(String::new, |f| f.to_uppercase().chain(c).collect())
}

fn decoy(rng: &mut ChaCha8Rng) -> String {
    match rng.gen_range(0..13) {
        0 => format!(" who smoke at least {} cigarettes per day", rng.gen_range(5..=20)),
        1 => format!(", with a body mass index of {}.{} to {}.0 kg/m2", rng.gen_range(17..=20), rng.gen_range(1..=9), rng.gen_range(28..=40)),
        2 => format!(", with at least {} years of education", rng.gen_range(6..=16)),
        3 => format!(" and a smoking history of at least {} years", rng.gen_range(1..=5)),
        4 => format!(" and smoke {} or more cigarettes per day", rng.gen_range(5..=25)),
        5 => format!(", weighing at least {}.{} kg", rng.gen_range(40..=55), rng.gen_range(1..=9)),
        6 => format!(" with systolic blood pressure below {} mmHg", rng.gen_range(130..=180)),
        7 => format!(" weighing less than {} kg", rng.gen_range(100..=150)),
        8 => format!(" with a diabetes duration of {}.{} years or less", rng.gen_range(1..=9), rng.gen_range(1..=9)),
        9 => format!(", resident in the area for at least {} years", rng.gen_range(1..=9)),
        10 => format!(" with a resting heart rate of {} beats per minute or less", rng.gen_range(60..=99)),
        11 => format!(", with HbA1c between {}.{} and {}.{}%", rng.gen_range(6..=7), rng.gen_range(0..=9), rng.gen_range(9..=11), rng.gen_range(0..=9)),
        _ => format!(" with {} diagnosed within the past {} months", CONDITIONS.choose(rng).unwrap(), rng.gen_range(2..=24)),
    }
}

fn decoys(rng: &mut ChaCha8Rng) -> String {
    let n = [0, 1, 1, 2][rng.gen_range(0..4)];
    (0..n).map(|_| decoy(rng)).collect()
}

fn prefix(rng: &mut ChaCha8Rng) -> String {
    match rng.gen_range(0..10) {
        0 => format!("One of the first {} referrals, ", rng.gen_range(100..=500)),
        1 => format!("Stage {} or {} disease; ", rng.gen_range(1..=2), rng.gen_range(3..=4)),
        2 => format!("At least {} clinic visits in the past {} months, ", rng.gen_range(2..=6), rng.gen_range(6..=24)),
        3 => format!("Up to {} participants per site, ", rng.gen_range(20..=300)),
        _ => String::new(),
    }
}

fn both_clause(min: u32, max: u32, rng: &mut ChaCha8Rng) -> Vec<String> {
    let pop = POPULATIONS.choose(rng).unwrap();
    let body = match rng.gen_range(0..14) {
        0 => format!("Men and women aged {min} to {max} years"),
        1 => format!("Age {min}-{max} years"),
        2 => format!("Aged between {min} and {max} years, inclusive"),
        3 => format!("{} {min}-{max} years old", capitalize(pop)),
        4 => format!("Healthy {pop} between the ages of {min} and {max} years"),
        5 => format!("{min} to {max} years of age"),
        6 => format!("Aged from {min} to {max} years"),
        7 => format!("Ages {min} through {max} years"),
        8 => format!("Age \u{2265} {min} years and \u{2264} {max} years"),
        9 => format!("{} who are {min}-{max} years old at enrollment", capitalize(pop)),
        10 => format!("Aged {min} years or older and {max} years or younger"),
        11 => format!("{} aged {min}\u{2013}{max} years", capitalize(pop)),
        12 => format!("Age range {min} to {max} years"),
        _ => {
            return vec![
                format!("Age {min} years or older."),
                format!("Age {max} years or younger."),
            ]
        }
    };
    let suffix = decoys(rng);
    vec![format!("{}{body}{suffix}.", prefix(rng))]
}

fn min_clause(min: u32, rng: &mut ChaCha8Rng) -> String {
    let body = match rng.gen_range(0..8) {
        0 => format!("At least {min} years of age"),
        1 => format!("Age {min} years or older"),
        2 => format!("Women and men at least {min} years of age with suspected {}", CONDITIONS.choose(rng).unwrap()),
        3 => format!("Aged {min} years and older"),
        4 => format!("Age \u{2265} {min} years"),
        5 => format!("{min} years of age or older at screening"),
        6 => format!("Adults older than {min} years"),
        _ => format!("Aged over {min} years"),
    };
    let suffix = decoys(rng);
    format!("{}{body}{suffix}.", prefix(rng))
}

fn max_clause(max: u32, rng: &mut ChaCha8Rng) -> String {
    match rng.gen_range(0..4) {
        0 => format!("Age up to {max} years."),
        1 => format!("{max} years of age or younger."),
        2 => format!("Aged {max} years or less."),
        _ => format!("Children under {max} years of age."),
    }
}

/// Registry records with bulleted eligibility criteria and a free-text
/// description.
pub fn generate_registry(n: usize, seed: u64) -> Vec<RegistryRecordInput> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let min = rng.gen_range(12..=40u32);
            let max = rng.gen_range((min + 5).max(30)..=85u32);
            let shape = rng.gen_range(0..100);
            let (age_clauses, min_age, max_age) = match shape {
                0..=64 => (both_clause(min, max, &mut rng), Some(min), Some(max)),
                65..=86 => (vec![min_clause(min, &mut rng)], Some(min), None),
                87..=94 => (vec![max_clause(max, &mut rng)], None, Some(max)),
                _ => (vec![], None, None),
            };
            let mut inclusion = age_clauses;
            let mut pool: Vec<&str> = OTHER_CRITERIA.to_vec();
            pool.shuffle(&mut rng);
            let extra = rng.gen_range(1..=3);
            inclusion.extend(pool[..extra].iter().map(|s| s.to_string()));
            inclusion.shuffle(&mut rng);
            let exclusion: Vec<String> = pool[extra..extra + rng.gen_range(1..=3)].iter().map(|s| s.to_string()).collect();
            let bullets = |items: &[String]| {
                items.iter().map(|s| format!("  - {s}")).collect::<Vec<_>>().join("\n")
            };
            let criteria = format!(
                "Inclusion Criteria:\n\n{}\n\nExclusion Criteria:\n\n{}",
                bullets(&inclusion),
                bullets(&exclusion)
            );
            let mut description: Vec<String> = Vec::new();
            for _ in 0..rng.gen_range(3..=5) {
                description.push(fill(DESCRIPTIONS.choose(&mut rng).unwrap(), &mut rng));
            }
            let age = |v: Option<u32>| v.map_or_else(|| "N/A".to_string(), |v| format!("{v} Years"));
            RegistryRecordInput {
                nct_id: format!("NCT{:08}", 10_000_000 + i),
                criteria,
                minimum_age: age(min_age),
                maximum_age: age(max_age),
                description: Some(description.join(" ")),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Factual {
    /// "who were X-Y years old"
    RangeOld,
    /// "aged X-Y years were randomized"
    RangeAged,
    /// "ranged in age from X to Y years"
    RangedFrom,
    /// "ranged between X and Y years"
    RangedBetween,
    /// "aged X to Y years"
    AgedTo,
    /// minimum only
    AtLeast,
}

const FACTUAL_PLAN: [Factual; 20] = [
    Factual::RangeOld,
    Factual::RangeAged,
    Factual::RangedFrom,
    Factual::RangedBetween,
    Factual::AgedTo,
    Factual::RangeOld,
    Factual::RangeAged,
    Factual::RangedFrom,
    Factual::AtLeast,
    Factual::RangedBetween,
    Factual::RangeOld,
    Factual::AgedTo,
    Factual::RangeAged,
    Factual::RangedFrom,
    Factual::AtLeast,
    Factual::RangeOld,
    Factual::RangedBetween,
    Factual::AgedTo,
    Factual::RangeAged,
    Factual::RangeOld,
];

fn factual_sentence(style: Factual, min: u32, max: u32, n: u32, pop: &str, rng: &mut ChaCha8Rng) -> String {
    let int = INTERVENTIONS.choose(rng).unwrap();
    let int2 = INTERVENTIONS.choose(rng).unwrap();
    match style {
        Factual::RangeOld => format!(
            "Participants were {n} {pop}, who were {min}-{max} years old and enrolled at a university."
        ),
        Factual::RangeAged => format!(
            "Participants aged {min}-{max} years were randomized to {int} (n={}) or to {int2} (n={}).",
            n / 2,
            n - n / 2
        ),
        Factual::RangedFrom => format!("The {n} enrolled {pop} ranged in age from {min} to {max} years."),
        Factual::RangedBetween => format!("Ages of the {n} participants ranged between {min} and {max} years."),
        Factual::AgedTo => format!("The final sample included {n} {pop} aged {min} to {max} years."),
        Factual::AtLeast => format!("All {n} participants were {min} years of age or older."),
    }
}

/// One generated article with its gold annotation.
#[derive(Debug, Clone)]
pub struct SyntheticArticle {
    pub document: DocumentRecord,
    pub gold: GoldAnnotation,
}

/// Sectioned articles built around the factual, speculative and unrelated
/// age expressions of the example sentences.
pub fn generate_articles(n: usize, seed: u64) -> Vec<SyntheticArticle> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let style = FACTUAL_PLAN[i % FACTUAL_PLAN.len()];
            let pop = *POPULATIONS.choose(&mut rng).unwrap();
            let cond = *CONDITIONS.choose(&mut rng).unwrap();
            let int = *INTERVENTIONS.choose(&mut rng).unwrap();
            let min = rng.gen_range(16..=30u32);
            let max = rng.gen_range(min + 6..=70u32);
            let gold_max = (style != Factual::AtLeast).then_some(max);
            let elig_min = min.saturating_sub(rng.gen_range(0..=2)).max(16);
            let sibling_case = i % 20 == 9;
            let elig_max = max + rng.gen_range(1..=6);
            let elig_min = if sibling_case { min } else { elig_min };
            let n_part = rng.gen_range(40..400u32);
            let id = format!("SYN-{:02}", i + 1);

            let abstract_ = vec![format!(
                "Background: {} is common among {pop}. Methods: We conducted a randomized trial of {int}. Results: Abstinence improved at {} months. Conclusions: The approach is feasible.",
                capitalize(cond),
                rng.gen_range(3..=12)
            )];

            let distractor = match i % 3 {
                0 => format!(
                    "An estimated {}.{}% of young adults aged {}-{} years are current smokers.",
                    rng.gen_range(12..=30),
                    rng.gen_range(1..=9),
                    rng.gen_range(16..=20),
                    rng.gen_range(24..=29)
                ),
                1 => format!(
                    "Smoking Dutch youths had in many cases tried their first cigarette at the age of {}-{} years.",
                    rng.gen_range(10..=12),
                    rng.gen_range(13..=15)
                ),
                _ => format!(
                    "Prior surveys of {pop} between {} and {} years of age reported high rates of {cond}.",
                    rng.gen_range(20..=30),
                    rng.gen_range(50..=75)
                ),
            };
            let introduction = vec![format!(
                "{} remains a leading cause of preventable disease. {distractor} Few trials have tested {int} in this group.",
                capitalize(cond)
            )];

            let speculative = match if sibling_case { 4 } else { i % 4 } {
                4 => format!(
                    "Eligibility for this study included being a student (full or part time), smoking at least 1 cigarette/day in each of the past 7 days, being aged {elig_min}-{elig_max} years, and being interested in quitting smoking in the next 6 months."
                ),
                0 => format!(
                    "To be included in the study, {pop} had to be between the ages of {elig_min} and {elig_max} years."
                ),
                1 => format!(
                    "The subjects were eligible for inclusion if they were at least {elig_min} years of age, reported smoking 10 or more cigarettes per day."
                ),
                2 => format!("Eligible {pop} must be {elig_min} to {elig_max} years of age."),
                _ => format!("Volunteers needed to be aged {elig_min}-{elig_max} years and have to provide consent."),
            };
            let factual = factual_sentence(style, min, max, n_part, pop, &mut rng);
            let method_paras = vec![
                format!("{speculative} Recruitment took place through {} clinics.", rng.gen_range(2..=9)),
                format!("{factual} Each participant provided written informed consent."),
                format!(
                    "Follow-up assessments were completed {} year after baseline.",
                    rng.gen_range(1..=3)
                ),
            ];

            let mean_whole = (min + max) / 2;
            let result = vec![format!(
                "The mean age of participants was {mean_whole}.{} years (SD = {}.{}). Retention at follow-up was {}%.",
                rng.gen_range(1..=9),
                rng.gen_range(3..=12),
                rng.gen_range(1..=9),
                rng.gen_range(70..=95)
            )];

            let discussion = vec![format!(
                "Future trials should include {pop} older than {} years. Our findings support wider use of {int}.",
                max + rng.gen_range(5..=10)
            )];

            let sections = vec![
                (SectionKind::Abstract, abstract_),
                (SectionKind::Introduction, introduction),
                (SectionKind::Method, method_paras),
                (SectionKind::Result, result),
                (SectionKind::Discussion, discussion),
            ];
            SyntheticArticle {
                document: DocumentRecord {
                    id: id.clone(),
                    sections: sections.into_iter().map(|(name, paragraphs)| SectionRecord { name, paragraphs }).collect(),
                },
                gold: GoldAnnotation { id, min: Some(min), max: gold_max },
            }
        })
        .collect()
}

/// Articles whose factual sentence reuses one of the example sentences
/// verbatim, including the sibling-clause failure case.
pub fn example_articles() -> Vec<SyntheticArticle> {
    use crate::fixtures::*;
    let article = |id: &str, method: Vec<&str>, intro: &str, gold: (Option<u32>, Option<u32>)| SyntheticArticle {
        document: DocumentRecord {
            id: id.to_string(),
            sections: vec![
                SectionRecord { name: SectionKind::Introduction, paragraphs: vec![intro.to_string()] },
                SectionRecord { name: SectionKind::Method, paragraphs: method.iter().map(|s| s.to_string()).collect() },
            ],
        },
        gold: GoldAnnotation { id: id.to_string(), min: gold.0, max: gold.1 },
    };
    vec![
        article("EX-1", vec![EXAMPLE_3, EXAMPLE_1], EXAMPLE_5, (Some(18), Some(23))),
        article("EX-2", vec![EXAMPLE_4, EXAMPLE_2], EXAMPLE_6, (Some(18), Some(24))),
        article("EX-7", vec![EXAMPLE_7_SPECULATIVE, EXAMPLE_7_FACTUAL], EXAMPLE_5, (Some(18), Some(23))),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;
    use crate::supervision::{load_records, select_age_clause};
    use crate::AgeKind;

    fn registry_jsonl(records: &[RegistryRecordInput]) -> String {
        records.iter().map(|r| serde_json::to_string(r).unwrap() + "\n").collect()
    }

    #[test]
    fn deterministic() {
        assert_eq!(generate_registry(50, 3), generate_registry(50, 3));
        assert_ne!(generate_registry(50, 3), generate_registry(50, 4));
        let a: Vec<String> = generate_articles(5, 1).iter().map(|a| serde_json::to_string(&a.document).unwrap()).collect();
        let b: Vec<String> = generate_articles(5, 1).iter().map(|a| serde_json::to_string(&a.document).unwrap()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn registry_loads_and_mostly_yields_clauses() {
        let (records, skipped) = load_records(&registry_jsonl(&generate_registry(400, 9))).unwrap();
        assert_eq!((records.len(), skipped), (400, 0));
        let with_min = records.iter().filter(|r| r.min_age.is_some()).count();
        let clauses = records.iter().filter(|r| select_age_clause(r, AgeKind::Min).is_some()).count();
        assert!(clauses as f64 >= 0.9 * with_min as f64, "{clauses} of {with_min}");
        assert!(records.iter().all(|r| r.description.is_some()));
    }

    #[test]
    fn articles_carry_their_gold_values() {
        for a in generate_articles(DEFAULT_ARTICLES, 5) {
            let doc = Document::from_json(&serde_json::to_value(&a.document).unwrap()).unwrap();
            let method: String = doc
                .sentences()
                .filter(|s| s.section == SectionKind::Method)
                .map(|s| s.text.as_str())
                .collect::<Vec<_>>()
                .join(" ");
            let min = a.gold.min.unwrap().to_string();
            assert!(method.contains(&min), "{}: {method}", a.gold.id);
            if let Some(max) = a.gold.max {
                assert!(method.contains(&max.to_string()));
            }
        }
    }
}
