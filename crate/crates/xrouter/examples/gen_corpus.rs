use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::io::Write;

const POOLS: [&[&str]; 8] = [
    &["engine","torque","piston","crankshaft","ignition","valve","turbo","chassis","gearbox","clutch","camshaft","radiator","exhaust","throttle","sedan","coupe","alternator","suspension","brakes","differential","dashboard","odometer","carburetor","cylinder","horsepower","drivetrain","axle","spark","coolant","transmission","muffler","fender","headlight","tire","mechanic","garage","diesel","gasoline","steering","bumper"],
    &["diagnosis","therapy","symptom","vaccine","clinical","dosage","patient","physician","surgery","anesthesia","antibiotic","cardiology","oncology","pathology","prescription","immunology","infection","chronic","remission","biopsy","ultrasound","radiology","neurology","pediatric","pharmacy","dermatology","insulin","hypertension","asthma","allergy","inflammation","hospital","nursing","triage","prognosis","syringe","ward","vital","fracture","rehabilitation"],
    &["goalkeeper","tournament","sprint","marathon","league","referee","stadium","midfielder","penalty","overtime","playoff","championship","dribble","slalom","relay","hurdles","javelin","decathlon","scoreboard","halftime","offside","freekick","volley","racket","singles","doubles","grandstand","smash","fairway","birdie","bunker","paddock","peloton","wicket","innings","dugout","scrum","lineout","tackle","fixture"],
    &["saucepan","simmer","marinade","garlic","roast","seasoning","dough","whisk","saute","braise","broth","julienne","caramelize","glaze","zest","puree","poach","blanch","knead","ferment","sourdough","risotto","paella","chutney","vinaigrette","ganache","meringue","brulee","skillet","colander","spatula","ladle","oregano","thyme","paprika","cumin","cinnamon","nutmeg","basil","rosemary"],
    &["dividend","portfolio","equity","hedge","liquidity","bond","coupon","brokerage","futures","options","margin","collateral","arbitrage","derivative","annuity","treasury","inflation","recession","valuation","solvency","amortization","actuary","underwriting","custodian","securities","commodities","forex","bullish","bearish","volatility","index","etf","mutual","escrow","audit","treasurer","accrual","fiduciary","leverage","capital"],
    &["compiler","runtime","thread","kernel","bitmask","debugger","namespace","buffer","stack","pointer","mutex","semaphore","scheduler","interrupt","bytecode","linker","register","cache","microcode","firmware","virtualization","container","hypervisor","daemon","socket","packet","router","firewall","encryption","hashing","algorithm","recursion","iterator","closure","garbage","allocator","syntax","parser","lexer","opcode"],
    &["itinerary","passport","hostel","voyage","landmark","excursion","visa","boarding","layover","customs","souvenir","backpacking","cruise","safari","trek","expedition","monsoon","archipelago","lagoon","fjord","savanna","bazaar","caravan","nomad","pilgrimage","consulate","embassy","duffel","luggage","harbor","runway","cockpit","steward","cabin","berth","compass","atlas","wanderlust","jetlag","postcard"],
    &["melody","chord","violin","tempo","rhythm","orchestra","sonata","crescendo","aria","libretto","soprano","baritone","cello","oboe","clarinet","timpani","concerto","symphony","overture","cadenza","arpeggio","staccato","legato","vibrato","falsetto","harmony","counterpoint","fugue","etude","nocturne","prelude","rhapsody","maestro","podium","rehearsal","ensemble","quartet","chorale","anthem","ballad"],
];

const FILLER: &[&str] = &["today","people","often","really","question","example","discuss","explain","consider","general","detail","result","process","practice","common","recent","article","guide","review","basic"];

fn main() {
    // sanity: pools pairwise disjoint
    let mut all: Vec<&str> = POOLS.iter().flat_map(|p| p.iter().copied()).collect();
    let n = all.len();
    all.sort(); all.dedup();
    assert_eq!(n, all.len(), "duplicate words across pools");

    let mut rng = ChaCha20Rng::seed_from_u64(0x5EED_C0DE);
    let mut f = std::fs::File::create("crates/xrouter/assets/corpus.jsonl").unwrap();
    for cat in 0..8usize {
        for _ in 0..200 {
            let len = rng.gen_range(40..=70);
            let mut words = Vec::with_capacity(len);
            for _ in 0..len {
                if rng.gen::<f64>() < 0.10 {
                    words.push(FILLER[rng.gen_range(0..FILLER.len())]);
                } else {
                    words.push(POOLS[cat][rng.gen_range(0..POOLS[cat].len())]);
                }
            }
            let doc = serde_json::json!({"text": words.join(" "), "category": cat});
            writeln!(f, "{doc}").unwrap();
        }
    }
    eprintln!("wrote corpus");
}
