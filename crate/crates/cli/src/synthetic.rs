//! Synthetic stand-in for the two event collections: news and public
//! tweets in five languages, crowd labels from reliable and spamming
//! workers, and gold items for the trust filter.
//!
//! The generator plants everything the pipeline is meant to remove
//! (retweets, other-event mentions, near-duplicates, Spanish, tweets without
//! letters, out-of-window tweets) so every stage has work to do.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::{Duration, Timelike};
use crisisnews_core::annotation::{Sentiment, Sympathy};
use crisisnews_core::corpus::{levenshtein_bounded, Event, Region, TimeWindow, TweetRecord};
use crisisnews_core::rng::substream;
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::PipelineError;

pub const DEFAULT_SEED: u64 = 20151112;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Lang {
    En,
    Ar,
    Fr,
    De,
    Es,
}

impl Lang {
    fn code(self) -> &'static str {
        match self {
            Lang::En => "en",
            Lang::Ar => "ar",
            Lang::Fr => "fr",
            Lang::De => "de",
            Lang::Es => "es",
        }
    }
}

struct Bank {
    sympathetic: &'static [&'static str],
    news: &'static [&'static str],
    negative: &'static [&'static str],
    positive: &'static [&'static str],
    details: &'static [&'static str],
    blast: [&'static str; 2],
    beirut: &'static [&'static str],
    paris: &'static [&'static str],
    beirut_tags: &'static [&'static str],
    paris_tags: &'static [&'static str],
}

const EN: Bank = Bank {
    sympathetic: &[
        "Our thoughts are with the victims in {place}",
        "We pray for {place} tonight",
        "Solidarity with the people of {place}",
        "Deepest condolences to the families of those killed in {place}",
        "Heartbroken for {place}, we stand with you",
        "Sending love and prayers to everyone in {place}",
    ],
    news: &[
        "Police say the {blast} in {place} killed {n} people",
        "Death toll from the {place} {blast} rises to {n}, officials confirm",
        "Live updates: security forces search {place} after the {blast}",
        "Witnesses describe the scene after the {blast} in {place}",
        "Officials identify {n} suspects linked to the {place} attacks",
        "Authorities raise the threat level following the {place} {blast}",
    ],
    negative: &["Horrific.", "Terrible news.", "Devastating.", "Shocking scenes."],
    positive: &["Hope prevails.", "Stronger together.", "Grateful to the rescuers.", "Inspiring response from volunteers."],
    details: &[
        "near the market",
        "on Thursday evening",
        "according to local media",
        "as rescuers search the area",
        "in the city centre",
        "hours after the attack",
        "while hospitals call for blood donors",
        "as world leaders send messages",
        "say officials",
        "in a statement",
        "reports our correspondent",
        "witnesses said",
    ],
    blast: ["blast", "explosion"],
    beirut: &["Beirut", "southern Beirut", "Lebanon"],
    paris: &["Paris", "France", "central Paris"],
    beirut_tags: &["#Beirut", "#Lebanon", "#BeirutAttacks", ""],
    paris_tags: &["#Paris", "#ParisAttacks", "#PrayForParis", ""],
};

const AR: Bank = Bank {
    sympathetic: &[
        "قلوبنا مع ضحايا {place}",
        "نصلي من أجل {place} الليلة",
        "تضامننا الكامل مع أهل {place}",
        "خالص التعازي لعائلات الضحايا في {place}",
        "الرحمة لشهداء {place} والشفاء للجرحى",
        "كل الحب والدعاء لأهلنا في {place}",
    ],
    news: &[
        "الشرطة: {blast} {place} أسفر عن مقتل {n} أشخاص",
        "ارتفاع حصيلة ضحايا {blast} {place} إلى {n} قتيلا",
        "عاجل: قوات الأمن تفتش {place} بعد {blast}",
        "شهود عيان يصفون المشهد بعد {blast} {place}",
        "السلطات تحدد هوية {n} مشتبه بهم في هجمات {place}",
        "رفع حالة التأهب الأمني بعد {blast} {place}",
    ],
    negative: &["مأساة مروعة.", "خبر مؤلم.", "مشاهد صادمة.", "كارثة حقيقية."],
    positive: &["الأمل باق.", "معا أقوى.", "شكرا لفرق الإنقاذ.", "موقف إنساني رائع من المتطوعين."],
    details: &[
        "قرب السوق",
        "مساء الخميس",
        "بحسب وسائل إعلام محلية",
        "بينما تبحث فرق الإنقاذ في المكان",
        "في وسط المدينة",
        "بعد ساعات من الهجوم",
        "والمستشفيات تطلب التبرع بالدم",
        "وفق مصادر رسمية",
        "في بيان رسمي",
        "بحسب مراسلنا",
        "قال شهود عيان",
    ],
    blast: ["انفجار", "تفجير"],
    beirut: &["بيروت", "الضاحية الجنوبية", "لبنان"],
    paris: &["باريس", "فرنسا", "وسط باريس"],
    beirut_tags: &["#بيروت", "#لبنان", "#Beirut", ""],
    paris_tags: &["#باريس", "#فرنسا", "#Paris", ""],
};

const FR: Bank = Bank {
    sympathetic: &[
        "Nos pensées vont aux victimes de {place}",
        "Nous prions pour {place} ce soir",
        "Solidarité avec le peuple de {place}",
        "Sincères condoléances aux familles des victimes à {place}",
        "Le cœur brisé pour {place}, nous sommes avec vous",
        "Pensées et prières pour tous les habitants de {place}",
    ],
    news: &[
        "Selon la police, l'{blast} à {place} a fait {n} morts",
        "Le bilan de l'{blast} de {place} s'alourdit à {n} morts",
        "Direct : les forces de sécurité fouillent {place} après l'{blast}",
        "Des témoins décrivent la scène après l'{blast} à {place}",
        "Les enquêteurs identifient {n} suspects liés aux attaques de {place}",
        "Les autorités relèvent le niveau d'alerte après l'{blast} de {place}",
    ],
    negative: &["Horrible.", "Terrible nouvelle.", "Scènes choquantes.", "Quelle tragédie."],
    positive: &["Gardons espoir.", "Ensemble nous sommes plus forts.", "Merci aux secouristes.", "Belle mobilisation des bénévoles."],
    details: &[
        "près du marché",
        "jeudi soir",
        "selon les médias locaux",
        "pendant que les secours fouillent le quartier",
        "dans le centre-ville",
        "quelques heures après l'attaque",
        "alors que les hôpitaux appellent aux dons de sang",
        "selon des sources officielles",
        "dans un communiqué",
        "rapporte notre correspondant",
        "selon des témoins",
    ],
    blast: ["explosion", "attentat"],
    beirut: &["Beyrouth", "la banlieue sud de Beyrouth", "Beyrouth-Sud"],
    paris: &["Paris", "la capitale", "Saint-Denis"],
    beirut_tags: &["#Beyrouth", "#Liban", ""],
    paris_tags: &["#Paris", "#AttentatsParis", "#PorteOuverte", ""],
};

const DE: Bank = Bank {
    sympathetic: &[
        "Unsere Gedanken sind bei den Opfern in {place}",
        "Wir beten heute Abend für {place}",
        "Solidarität mit den Menschen in {place}",
        "Tiefes Beileid den Familien der Opfer in {place}",
        "Wir trauern mit {place} und stehen an eurer Seite",
        "Liebe und Gebete für alle Menschen in {place}",
    ],
    news: &[
        "Laut Polizei tötete die {blast} in {place} {n} Menschen",
        "Zahl der Toten nach der {blast} in {place} steigt auf {n}",
        "Liveticker: Sicherheitskräfte durchsuchen {place} nach der {blast}",
        "Augenzeugen schildern die Lage nach der {blast} in {place}",
        "Ermittler identifizieren {n} Verdächtige nach den Anschlägen in {place}",
        "Behörden erhöhen die Warnstufe nach der {blast} in {place}",
    ],
    negative: &["Schrecklich.", "Furchtbare Nachrichten.", "Schockierende Bilder.", "Eine Tragödie."],
    positive: &["Die Hoffnung bleibt.", "Gemeinsam sind wir stark.", "Danke an die Retter.", "Großartige Hilfe der Freiwilligen."],
    details: &[
        "in der Nähe des Marktes",
        "am Donnerstagabend",
        "laut lokalen Medien",
        "während Retter das Gebiet durchsuchen",
        "in der Innenstadt",
        "wenige Stunden nach dem Anschlag",
        "während Krankenhäuser um Blutspenden bitten",
        "nach offiziellen Angaben",
        "in einer Mitteilung",
        "berichtet unser Korrespondent",
        "sagten Augenzeugen",
    ],
    blast: ["Explosion", "Detonation"],
    beirut: &["Beirut", "Südbeirut", "Libanon"],
    paris: &["Paris", "Frankreich", "der französischen Hauptstadt"],
    beirut_tags: &["#Beirut", "#Libanon", ""],
    paris_tags: &["#Paris", "#Frankreich", "#ParisAttacks", ""],
};

const ES: Bank = Bank {
    sympathetic: &[
        "Nuestras oraciones están con las víctimas de {place}",
        "Toda nuestra solidaridad con el pueblo de {place}",
        "Nuestro más sentido pésame a las familias de {place}",
    ],
    news: &[
        "La policía confirma {n} muertos tras la {blast} en {place}",
        "Aumenta a {n} la cifra de muertos del {blast} en {place}",
        "Las fuerzas de seguridad registran {place} después de la {blast}",
    ],
    negative: &["Terrible.", "Qué tragedia."],
    positive: &["Fuerza y esperanza.", "Juntos somos más fuertes."],
    details: &["según medios locales", "en el centro de la ciudad", "horas después del ataque", "según fuentes oficiales"],
    blast: ["explosión", "atentado"],
    beirut: &["Beirut", "el sur de Beirut"],
    paris: &["París", "la capital francesa"],
    beirut_tags: &["#Beirut", ""],
    paris_tags: &["#París", ""],
};

fn bank(lang: Lang) -> &'static Bank {
    match lang {
        Lang::En => &EN,
        Lang::Ar => &AR,
        Lang::Fr => &FR,
        Lang::De => &DE,
        Lang::Es => &ES,
    }
}

/// Tweets mentioning the other attack, appended to otherwise clean tweets.
fn cross_mentions(event: Event) -> &'static [&'static str] {
    match event {
        Event::Beirut => &["#ParisAttacks", "#Bataclan", "#PorteOuverte", "and now Paris"],
        Event::Paris => &["#BeirutAttacks", "after Beirut", "Lebanon too", "بيروت"],
    }
}

/// How many tweets of each kind one collection holds.
struct Plan {
    arab: usize,
    western: usize,
    public: usize,
    retweets: usize,
    near_duplicates: usize,
    cross_event: usize,
    spanish: usize,
    symbols: usize,
    outside_window: usize,
}

impl Plan {
    fn total(&self) -> usize {
        self.arab
            + self.western
            + self.public
            + self.retweets
            + self.near_duplicates
            + self.cross_event
            + self.spanish
            + self.symbols
            + self.outside_window
    }
}

const BEIRUT_PLAN: Plan = Plan {
    arab: 850,
    western: 180,
    public: 350,
    retweets: 150,
    near_duplicates: 60,
    cross_event: 100,
    spanish: 30,
    symbols: 30,
    outside_window: 150,
};

const PARIS_PLAN: Plan = Plan {
    arab: 700,
    western: 1300,
    public: 500,
    retweets: 200,
    near_duplicates: 80,
    cross_event: 80,
    spanish: 60,
    symbols: 40,
    outside_window: 140,
};

/// Share of news tweets that are sympathetic, by event and media region.
fn sympathy_rate(event: Event, region: Region) -> f64 {
    match (event, region) {
        (Event::Beirut, Region::Arab) => 0.8,
        (Event::Beirut, Region::Western) => 0.15,
        (Event::Paris, Region::Arab) => 0.55,
        (Event::Paris, Region::Western) => 0.25,
    }
}

fn draw_sentiment(rng: &mut ChaCha8Rng, sympathy: Sympathy) -> Sentiment {
    let u: f64 = rng.gen();
    let (neg, neu) = match sympathy {
        Sympathy::Sympathetic => (0.55, 0.10),
        Sympathy::Unsympathetic => (0.50, 0.45),
    };
    if u < neg {
        Sentiment::Negative
    } else if u < neg + neu {
        Sentiment::Neutral
    } else {
        Sentiment::Positive
    }
}

struct Account {
    username: String,
    user_id: String,
    region: Region,
    country: &'static str,
    followers: u64,
    langs: &'static [(Lang, f64)],
}

/// Region, country, handle stem, language mix and account count.
type AccountSpec = (Region, &'static str, &'static str, &'static [(Lang, f64)], usize);

const ACCOUNT_SPECS: &[AccountSpec] = &[
    (Region::Western, "US", "desk", &[(Lang::En, 1.0)], 7),
    (Region::Western, "GB", "wire", &[(Lang::En, 1.0)], 5),
    (Region::Western, "CA", "news", &[(Lang::En, 0.8), (Lang::Fr, 0.2)], 2),
    (Region::Western, "AU", "now", &[(Lang::En, 1.0)], 2),
    (Region::Western, "FR", "info", &[(Lang::Fr, 0.85), (Lang::En, 0.15)], 4),
    (Region::Western, "DE", "aktuell", &[(Lang::De, 0.9), (Lang::En, 0.1)], 4),
    (Region::Arab, "LB", "akhbar", &[(Lang::Ar, 0.5), (Lang::En, 0.25), (Lang::Fr, 0.25)], 5),
    (Region::Arab, "EG", "masr", &[(Lang::Ar, 0.8), (Lang::En, 0.2)], 4),
    (Region::Arab, "AE", "gulf", &[(Lang::Ar, 0.4), (Lang::En, 0.6)], 3),
    (Region::Arab, "JO", "alyoum", &[(Lang::Ar, 0.9), (Lang::En, 0.1)], 2),
    (Region::Arab, "QA", "doha", &[(Lang::Ar, 0.5), (Lang::En, 0.5)], 2),
    (Region::Arab, "TN", "tunis", &[(Lang::Ar, 0.5), (Lang::Fr, 0.5)], 2),
];

fn accounts(rng: &mut ChaCha8Rng) -> Vec<Account> {
    let mut out = Vec::new();
    for &(region, country, kind, langs, n) in ACCOUNT_SPECS {
        for i in 0..n {
            let followers = (5_000f64 * (6_000f64).powf(rng.gen::<f64>())).round() as u64;
            out.push(Account {
                username: format!("{}{kind}{}", country.to_lowercase(), i + 1),
                user_id: format!("{}", 90_000_000 + out.len() * 7919),
                region,
                country,
                followers,
                langs,
            });
        }
    }
    out
}

fn pick<'a>(rng: &mut ChaCha8Rng, items: &'a [&'a str]) -> &'a str {
    items[rng.gen_range(0..items.len())]
}

fn pick_lang(rng: &mut ChaCha8Rng, langs: &[(Lang, f64)]) -> Lang {
    let mut u: f64 = rng.gen();
    for &(l, w) in langs {
        if u < w {
            return l;
        }
        u -= w;
    }
    langs[langs.len() - 1].0
}

fn short_url(rng: &mut ChaCha8Rng) -> String {
    const ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
    let path: String = (0..10).map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())] as char).collect();
    format!("https://t.co/{path}")
}

fn compose(rng: &mut ChaCha8Rng, lang: Lang, event: Event, sympathy: Sympathy, sentiment: Sentiment) -> String {
    let b = bank(lang);
    let core = match sympathy {
        Sympathy::Sympathetic => pick(rng, b.sympathetic),
        Sympathy::Unsympathetic => pick(rng, b.news),
    };
    let place = pick(rng, if event == Event::Beirut { b.beirut } else { b.paris });
    let core = core
        .replace("{place}", place)
        .replace("{blast}", b.blast[rng.gen_range(0..2)])
        .replace("{n}", &rng.gen_range(3..80).to_string());
    let mut parts: Vec<String> = Vec::new();
    match sentiment {
        Sentiment::Negative => parts.push(pick(rng, b.negative).to_string()),
        Sentiment::Positive => parts.push(pick(rng, b.positive).to_string()),
        Sentiment::Neutral => {}
    }
    parts.push(format!("{core} {}.", pick(rng, b.details)));
    let tag = pick(rng, if event == Event::Beirut { b.beirut_tags } else { b.paris_tags });
    if !tag.is_empty() {
        parts.push(tag.to_string());
    }
    if rng.gen_bool(0.5) {
        parts.push(short_url(rng));
    }
    parts.join(" ")
}

/// Seconds into the window, front-loaded after the attack and modulated by
/// a day-night cycle.
fn window_offset(rng: &mut ChaCha8Rng, window: &TimeWindow) -> i64 {
    let span = window.duration_days * 86_400.0;
    loop {
        let t = if rng.gen_bool(0.5) { rng.gen::<f64>() * span } else { -rng.gen::<f64>().ln() * 43_200.0 };
        if t >= span {
            continue;
        }
        let hour = (window.start + Duration::seconds(t as i64)).hour() as f64;
        let activity = 0.25 + 0.75 * (std::f64::consts::PI * (hour - 3.0) / 24.0).sin().powi(2);
        if rng.gen::<f64>() < activity {
            return t as i64;
        }
    }
}

fn outside_offset(rng: &mut ChaCha8Rng, window: &TimeWindow) -> i64 {
    let span = (window.duration_days * 86_400.0) as i64;
    if rng.gen_bool(0.4) {
        -rng.gen_range(60..8 * 3600)
    } else {
        span + rng.gen_range(60..10 * 3600)
    }
}

fn retweet_count(rng: &mut ChaCha8Rng, followers: u64, sympathy: Sympathy) -> u64 {
    let base = 0.55 * (followers as f64 / 5_000.0).ln();
    let noise: f64 = (0..4).map(|_| rng.gen::<f64>() - 0.5).sum::<f64>() * 1.2;
    let shift = if sympathy == Sympathy::Sympathetic { -0.15 } else { 0.0 };
    ((base + noise + shift).exp() - 1.0).max(0.0).round() as u64
}

/// Ground truth of one generated news tweet.
#[derive(Debug, Clone, Serialize)]
struct Truth {
    tweet_id: String,
    event: Event,
    region: Region,
    lang: &'static str,
    kind: &'static str,
    sympathy: &'static str,
    sentiment: &'static str,
    labeled: bool,
}

struct Collection {
    tweets: Vec<TweetRecord>,
    truth: Vec<Truth>,
    /// Clean tweets chosen for crowd labelling with their true labels.
    to_label: Vec<(String, Sympathy, Sentiment)>,
}

struct Generator<'a> {
    rng: ChaCha8Rng,
    event: Event,
    window: TimeWindow,
    accounts: &'a [Account],
    next_id: u64,
    texts: Vec<Vec<char>>,
    out: Collection,
}

impl Generator<'_> {
    fn id(&mut self) -> String {
        self.next_id += 1;
        format!("{}", self.next_id)
    }

    fn record(&mut self, text: String, user_id: &str, followers: u64, offset: i64, sympathy: Sympathy) -> TweetRecord {
        let retweets = retweet_count(&mut self.rng, followers, sympathy);
        TweetRecord {
            id: self.id(),
            created_at: self.window.start + Duration::seconds(offset),
            hashtags: text
                .split_whitespace()
                .filter_map(|w| w.strip_prefix('#'))
                .filter(|h| !h.is_empty())
                .map(str::to_lowercase)
                .collect(),
            text,
            user_id: user_id.to_string(),
            user_followers: followers,
            retweet_count: retweets,
            is_retweet: false,
            lang: None,
            lang_confidence: None,
        }
    }

    /// A fresh text at normalised edit distance above 0.15 from every text
    /// generated so far, so chance collisions never merge in dedup.
    fn fresh_text(&mut self, lang: Lang, sympathy: Sympathy, sentiment: Sentiment) -> String {
        loop {
            let text = compose(&mut self.rng, lang, self.event, sympathy, sentiment);
            let chars: Vec<char> = text.chars().collect();
            let clash = self.texts.iter().any(|other| {
                let longer = chars.len().max(other.len());
                let k = (0.15 * longer as f64).ceil() as usize;
                chars.len().abs_diff(other.len()) <= k && levenshtein_bounded(&chars, other, k).is_some()
            });
            if !clash {
                self.texts.push(chars);
                return text;
            }
        }
    }

    fn account_of(&mut self, region: Region) -> usize {
        let pool: Vec<usize> = (0..self.accounts.len()).filter(|&i| self.accounts[i].region == region).collect();
        pool[self.rng.gen_range(0..pool.len())]
    }

    fn news(&mut self, region: Region, label_share: f64) {
        let a = self.account_of(region);
        let accounts = self.accounts;
        let account = &accounts[a];
        let lang = pick_lang(&mut self.rng, account.langs);
        let sympathy =
            if self.rng.gen_bool(sympathy_rate(self.event, region)) { Sympathy::Sympathetic } else { Sympathy::Unsympathetic };
        let sentiment = draw_sentiment(&mut self.rng, sympathy);
        let text = self.fresh_text(lang, sympathy, sentiment);
        let offset = window_offset(&mut self.rng, &self.window);
        let (user_id, followers) = (account.user_id.clone(), account.followers);
        let t = self.record(text, &user_id, followers, offset, sympathy);
        let labeled = self.rng.gen_bool(label_share);
        if labeled {
            self.out.to_label.push((t.id.clone(), sympathy, sentiment));
        }
        self.truth(&t, region, lang, "news", Some((sympathy, sentiment)), labeled);
        self.out.tweets.push(t);
    }

    fn truth(&mut self, t: &TweetRecord, region: Region, lang: Lang, kind: &'static str, labels: Option<(Sympathy, Sentiment)>, labeled: bool) {
        self.out.truth.push(Truth {
            tweet_id: t.id.clone(),
            event: self.event,
            region,
            lang: lang.code(),
            kind,
            sympathy: labels.map_or("", |l| l.0.as_str()),
            sentiment: labels.map_or("", |l| l.1.as_str()),
            labeled,
        });
    }

    fn variant(&mut self, kind: &'static str) {
        let region = if self.rng.gen_bool(0.5) { Region::Western } else { Region::Arab };
        let a = self.account_of(region);
        let accounts = self.accounts;
        let account = &accounts[a];
        let (user_id, followers) = (account.user_id.clone(), account.followers);
        let lang = if kind == "spanish" { Lang::Es } else { pick_lang(&mut self.rng, account.langs) };
        let sympathy = if self.rng.gen_bool(0.4) { Sympathy::Sympathetic } else { Sympathy::Unsympathetic };
        let sentiment = draw_sentiment(&mut self.rng, sympathy);
        let (text, offset) = match kind {
            "cross_event" => {
                let text = self.fresh_text(lang, sympathy, sentiment);
                let mention = pick(&mut self.rng, cross_mentions(self.event));
                (format!("{text} {mention}"), window_offset(&mut self.rng, &self.window))
            }
            "spanish" => (self.fresh_text(lang, sympathy, sentiment), window_offset(&mut self.rng, &self.window)),
            "symbols" => {
                let glyph = pick(&mut self.rng, &["📷", "🕯️ 🕯️", "💔", "🔴 🔴", "🎥"]);
                (format!("{glyph} {}", short_url(&mut self.rng)), window_offset(&mut self.rng, &self.window))
            }
            "outside_window" => (self.fresh_text(lang, sympathy, sentiment), outside_offset(&mut self.rng, &self.window)),
            _ => unreachable!("unknown variant {kind}"),
        };
        let t = self.record(text, &user_id, followers, offset, sympathy);
        self.truth(&t, region, lang, kind, None, false);
        self.out.tweets.push(t);
    }

    fn public(&mut self) {
        let lang = pick_lang(&mut self.rng, &[(Lang::En, 0.6), (Lang::Ar, 0.2), (Lang::Fr, 0.1), (Lang::De, 0.1)]);
        let sympathy = if self.rng.gen_bool(0.6) { Sympathy::Sympathetic } else { Sympathy::Unsympathetic };
        let sentiment = draw_sentiment(&mut self.rng, sympathy);
        let text = compose(&mut self.rng, lang, self.event, sympathy, sentiment);
        let user = format!("{}", 3_000_000 + self.rng.gen_range(0..1_000_000u64));
        let followers = self.rng.gen_range(0..3_000);
        let offset = window_offset(&mut self.rng, &self.window);
        let t = self.record(text, &user, followers, offset, sympathy);
        self.out.tweets.push(t);
    }

    /// Copies of earlier news tweets: retweets by another news account, or
    /// a lightly edited re-post by the same account shortly after.
    fn copies(&mut self, n: usize, retweet: bool) {
        let originals: Vec<usize> = (0..self.out.truth.len()).filter(|&i| self.out.truth[i].kind == "news").collect();
        for _ in 0..n {
            let i = originals[self.rng.gen_range(0..originals.len())];
            let src = self.out.tweets.iter().find(|t| t.id == self.out.truth[i].tweet_id).cloned().expect("original tweet");
            let mut t = src.clone();
            t.id = self.id();
            t.created_at = src.created_at + Duration::seconds(self.rng.gen_range(30..5_400));
            if retweet {
                let a = self.rng.gen_range(0..self.accounts.len());
                let author = self.accounts.iter().find(|acc| acc.user_id == src.user_id).map_or("news", |acc| &acc.username);
                t.text = format!("RT @{author}: {}", src.text);
                t.user_id = self.accounts[a].user_id.clone();
                t.user_followers = self.accounts[a].followers;
                t.is_retweet = true;
                t.retweet_count = src.retweet_count;
            } else {
                t.text = match self.rng.gen_range(0..3) {
                    0 => format!("{} !", src.text),
                    1 => format!("UPDATE {}", src.text),
                    _ => src.text.replacen(". ", ", ", 1),
                };
            }
            self.out.tweets.push(t);
        }
    }
}

fn collection(seed: u64, event: Event, plan: &Plan, accounts: &[Account], id_base: u64) -> Collection {
    let window = match event {
        Event::Beirut => TimeWindow::beirut(),
        Event::Paris => TimeWindow::paris(),
    };
    let stream = match event {
        Event::Beirut => 1,
        Event::Paris => 2,
    };
    let mut g = Generator {
        rng: substream(seed, stream),
        event,
        window,
        accounts,
        next_id: id_base,
        texts: Vec::new(),
        out: Collection { tweets: Vec::new(), truth: Vec::new(), to_label: Vec::new() },
    };
    // The small Western Beirut slice is labelled in full, as in the annotated sample.
    let western_share = if event == Event::Beirut { 1.0 } else { 0.35 };
    for _ in 0..plan.arab {
        g.news(Region::Arab, 0.35);
    }
    for _ in 0..plan.western {
        g.news(Region::Western, western_share);
    }
    for (kind, n) in [
        ("cross_event", plan.cross_event),
        ("spanish", plan.spanish),
        ("symbols", plan.symbols),
        ("outside_window", plan.outside_window),
    ] {
        for _ in 0..n {
            g.variant(kind);
        }
    }
    for _ in 0..plan.public {
        g.public();
    }
    g.copies(plan.retweets, true);
    g.copies(plan.near_duplicates, false);
    debug_assert_eq!(g.out.tweets.len(), plan.total());
    g.out.tweets.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.id.cmp(&b.id)));
    g.out
}

#[derive(Serialize)]
struct WorkerRow<'a> {
    tweet_id: &'a str,
    worker_id: &'a str,
    sympathy: &'a str,
    sentiment: &'a str,
    na: &'a str,
}

const WORKERS: usize = 40;
const SPAMMERS: usize = 6;
const GOLD_ITEMS: usize = 40;
const GOLD_PER_WORKER: usize = 20;
const LABELS_PER_TWEET: usize = 5;

fn other<T: Copy + PartialEq>(rng: &mut ChaCha8Rng, all: &[T], not: T) -> T {
    let rest: Vec<T> = all.iter().copied().filter(|x| *x != not).collect();
    rest[rng.gen_range(0..rest.len())]
}

/// One worker answer: `None` for "not applicable".
fn answer(rng: &mut ChaCha8Rng, worker: usize, truth: (Sympathy, Sentiment)) -> Option<(Sympathy, Sentiment)> {
    let symps = [Sympathy::Unsympathetic, Sympathy::Sympathetic];
    if worker < SPAMMERS {
        return Some((symps[rng.gen_range(0..2)], Sentiment::ALL[rng.gen_range(0..3)]));
    }
    if rng.gen_bool(0.02) {
        return None;
    }
    let s = if rng.gen_bool(0.95) { truth.0 } else { other(rng, &symps, truth.0) };
    let m = if rng.gen_bool(0.92) { truth.1 } else { other(rng, &Sentiment::ALL, truth.1) };
    Some((s, m))
}

type KnownLabel = (String, Sympathy, Sentiment);

/// (worker, tweet, answer); `None` is a not-applicable answer.
type Answer = (String, String, Option<(Sympathy, Sentiment)>);

fn worker_rows(seed: u64, to_label: &[KnownLabel], gold: &[KnownLabel]) -> Vec<Answer> {
    let mut rng = substream(seed, 3);
    let worker = |w: usize| format!("w{:02}", w + 1);
    let mut rows = Vec::new();
    for w in 0..WORKERS {
        for g in sample(&mut rng, gold.len(), GOLD_PER_WORKER).into_vec() {
            let (id, s, m) = &gold[g];
            rows.push((id.clone(), worker(w), answer(&mut rng, w, (*s, *m))));
        }
    }
    for (id, s, m) in to_label {
        for w in sample(&mut rng, WORKERS, LABELS_PER_TWEET).into_vec() {
            rows.push((id.clone(), worker(w), answer(&mut rng, w, (*s, *m))));
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SyntheticSummary {
    pub tweets: BTreeMap<String, usize>,
    pub accounts: usize,
    pub labeled_tweets: usize,
    pub worker_labels: usize,
    pub gold_items: usize,
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

fn write_tweets(path: &Path, tweets: &[TweetRecord], malformed: usize) -> Result<(), PipelineError> {
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    for (i, t) in tweets.iter().enumerate() {
        serde_json::to_writer(&mut w, t)?;
        w.write_all(b"\n").map_err(io_err(path))?;
        // a few truncated records, as an interrupted stream capture leaves
        if malformed > 0 && i % (tweets.len() / malformed).max(1) == 7 {
            let line = serde_json::to_string(t)?;
            let cut = (0..=line.len() / 2).rev().find(|&c| line.is_char_boundary(c)).unwrap_or(0);
            writeln!(w, "{}", &line[..cut]).map_err(io_err(path))?;
        }
    }
    w.flush().map_err(io_err(path))
}

/// Write the synthetic collections, accounts, worker labels, gold items
/// and a ground-truth sheet into `dir`.
pub fn generate(dir: &Path, seed: u64) -> Result<SyntheticSummary, PipelineError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let accounts = accounts(&mut substream(seed, 0));
    let beirut = collection(seed, Event::Beirut, &BEIRUT_PLAN, &accounts, 665_000_000);
    let paris = collection(seed, Event::Paris, &PARIS_PLAN, &accounts, 666_000_000);

    write_tweets(&dir.join("tweets_beirut.jsonl"), &beirut.tweets, 3)?;
    write_tweets(&dir.join("tweets_paris.jsonl"), &paris.tweets, 3)?;

    let path = dir.join("accounts.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["username", "user_id", "region", "country", "follower_count"])?;
    for a in &accounts {
        w.write_record([a.username.as_str(), &a.user_id, a.region.as_str(), a.country, &a.followers.to_string()])?;
    }
    w.flush().map_err(io_err(&path))?;

    let mut gold_rng = substream(seed, 4);
    let gold: Vec<(String, Sympathy, Sentiment)> = (0..GOLD_ITEMS)
        .map(|i| {
            let s = if gold_rng.gen_bool(0.5) { Sympathy::Sympathetic } else { Sympathy::Unsympathetic };
            (format!("gold-{:02}", i + 1), s, draw_sentiment(&mut gold_rng, s))
        })
        .collect();
    let path = dir.join("gold.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["tweet_id", "sympathy", "sentiment"])?;
    for (id, s, m) in &gold {
        w.write_record([id.as_str(), s.as_str(), m.as_str()])?;
    }
    w.flush().map_err(io_err(&path))?;

    let to_label: Vec<(String, Sympathy, Sentiment)> = beirut.to_label.iter().chain(&paris.to_label).cloned().collect();
    let rows = worker_rows(seed, &to_label, &gold);
    let path = dir.join("worker_labels.csv");
    let mut w = csv::Writer::from_path(&path)?;
    for (tweet_id, worker_id, a) in &rows {
        w.serialize(WorkerRow {
            tweet_id,
            worker_id,
            sympathy: a.map_or("", |a| a.0.as_str()),
            sentiment: a.map_or("", |a| a.1.as_str()),
            na: if a.is_none() { "1" } else { "0" },
        })?;
    }
    w.flush().map_err(io_err(&path))?;

    let path = dir.join("truth.csv");
    let mut w = csv::Writer::from_path(&path)?;
    for t in beirut.truth.iter().chain(&paris.truth) {
        w.serialize(t)?;
    }
    w.flush().map_err(io_err(&path))?;

    Ok(SyntheticSummary {
        tweets: BTreeMap::from([("beirut".into(), beirut.tweets.len()), ("paris".into(), paris.tweets.len())]),
        accounts: accounts.len(),
        labeled_tweets: to_label.len(),
        worker_labels: rows.len(),
        gold_items: gold.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plans_add_up_to_five_thousand() {
        assert_eq!(BEIRUT_PLAN.total() + PARIS_PLAN.total(), 5_000);
    }

    #[test]
    fn composed_text_mentions_the_event_only() {
        let mut rng = substream(1, 0);
        for lang in [Lang::En, Lang::Ar, Lang::Fr, Lang::De] {
            for _ in 0..50 {
                let t = compose(&mut rng, lang, Event::Beirut, Sympathy::Sympathetic, Sentiment::Positive).to_lowercase();
                assert!(!t.contains("paris") && !t.contains("bataclan"), "{t}");
            }
        }
    }

    #[test]
    fn offsets_stay_inside_the_window() {
        let mut rng = substream(2, 0);
        let w = TimeWindow::paris();
        for _ in 0..2_000 {
            let o = window_offset(&mut rng, &w);
            assert!(w.contains(w.start + Duration::seconds(o)));
            assert!(!w.contains(w.start + Duration::seconds(outside_offset(&mut rng, &w))));
        }
    }
}
