//! Static word lists backing the synthetic-record and general-corpus
//! generators. Everything here is fictitious; the SSN area range 900-999 is
//! never issued in reality, which keeps generated identifiers unmistakably
//! fake.

pub const FIRST_NAMES: &[&str] = &[
    "James", "Mary", "Robert", "Patricia", "John", "Jennifer", "Michael", "Linda", "David",
    "Elizabeth", "William", "Barbara", "Richard", "Susan", "Joseph", "Jessica", "Thomas", "Sarah",
    "Charles", "Karen", "Christopher", "Lisa", "Daniel", "Nancy", "Matthew", "Betty", "Anthony",
    "Margaret", "Mark", "Sandra", "Donald", "Ashley", "Steven", "Kimberly", "Paul", "Emily",
    "Andrew", "Donna", "Joshua", "Michelle", "Kenneth", "Carol", "Kevin", "Amanda", "Brian",
    "Dorothy", "George", "Melissa", "Timothy", "Deborah", "Ronald", "Stephanie", "Edward",
    "Rebecca", "Jason", "Sharon", "Jeffrey", "Laura", "Ryan", "Cynthia", "Jacob", "Kathleen",
    "Gary", "Amy", "Nicholas", "Angela", "Eric", "Shirley", "Jonathan", "Anna", "Stephen",
    "Brenda", "Larry", "Pamela", "Justin", "Emma", "Scott", "Nicole", "Brandon", "Helen",
    "Benjamin", "Samantha", "Samuel", "Katherine", "Gregory", "Christine", "Alexander", "Debra",
    "Patrick", "Rachel", "Frank", "Carolyn", "Raymond", "Janet", "Jack", "Catherine", "Dennis",
    "Maria", "Jerry", "Heather", "Tyler", "Diane", "Aaron", "Ruth", "Jose", "Julie", "Adam",
    "Olivia", "Nathan", "Joyce", "Henry", "Virginia", "Douglas", "Victoria", "Zachary", "Kelly",
    "Peter", "Lauren", "Kyle", "Christina",
];

pub const LAST_NAMES: &[&str] = &[
    "Smith", "Johnson", "Williams", "Brown", "Jones", "Garcia", "Miller", "Davis", "Rodriguez",
    "Martinez", "Hernandez", "Lopez", "Gonzalez", "Wilson", "Anderson", "Thomas", "Taylor",
    "Moore", "Jackson", "Martin", "Lee", "Perez", "Thompson", "White", "Harris", "Sanchez",
    "Clark", "Ramirez", "Lewis", "Robinson", "Walker", "Young", "Allen", "King", "Wright",
    "Scott", "Torres", "Nguyen", "Hill", "Flores", "Green", "Adams", "Nelson", "Baker", "Hall",
    "Rivera", "Campbell", "Mitchell", "Carter", "Roberts", "Gomez", "Phillips", "Evans",
    "Turner", "Diaz", "Parker", "Cruz", "Edwards", "Collins", "Reyes", "Stewart", "Morris",
    "Morales", "Murphy", "Cook", "Rogers", "Gutierrez", "Ortiz", "Morgan", "Cooper", "Peterson",
    "Bailey", "Reed", "Kelly", "Howard", "Ramos", "Kim", "Cox", "Ward", "Richardson", "Watson",
    "Brooks", "Chavez", "Wood", "James", "Bennett", "Gray", "Mendoza", "Ruiz", "Hughes", "Price",
    "Alvarez", "Castillo", "Sanders", "Patel", "Myers", "Long", "Ross", "Foster", "Jimenez",
    "Powell", "Jenkins", "Perry", "Russell", "Sullivan", "Bell", "Coleman", "Butler", "Walsh",
    "Henderson", "Barnes", "Fisher", "Vasquez", "Simmons", "Romero", "Jordan", "Patterson",
    "Alexander", "Hamilton", "Graham",
];

pub const DIAGNOSES: &[&str] = &[
    "Type 2 Diabetes",
    "Type 1 Diabetes",
    "Hypertension",
    "Asthma",
    "Chronic Kidney Disease",
    "Atrial Fibrillation",
    "Coronary Artery Disease",
    "Rheumatoid Arthritis",
    "Osteoporosis",
    "Hypothyroidism",
    "Hyperthyroidism",
    "Chronic Migraine",
    "Epilepsy",
    "Chronic Obstructive Pulmonary Disease",
    "Congestive Heart Failure",
    "Iron Deficiency Anemia",
    "Gastroesophageal Reflux Disease",
    "Psoriasis",
    "Multiple Sclerosis",
    "Parkinson Disease",
    "Glaucoma",
    "Obstructive Sleep Apnea",
    "Celiac Disease",
    "Ulcerative Colitis",
];

pub const MEDICATIONS: &[&str] = &[
    "Metformin",
    "Lisinopril",
    "Atorvastatin",
    "Levothyroxine",
    "Amlodipine",
    "Omeprazole",
    "Albuterol",
    "Gabapentin",
    "Sertraline",
    "Montelukast",
    "Losartan",
    "Azithromycin",
    "Hydrochlorothiazide",
    "Simvastatin",
    "Citalopram",
    "Prednisone",
    "Tramadol",
    "Warfarin",
    "Metoprolol",
    "Pantoprazole",
    "Escitalopram",
    "Rosuvastatin",
    "Duloxetine",
    "Clopidogrel",
];

// General-corpus vocabulary. Kept strictly free of every token appearing in
// DIAGNOSES/MEDICATIONS (verified by test) so utility sentences carry no
// clinical content.

pub const GENERAL_ADJECTIVES: &[&str] = &[
    "quiet", "bright", "crowded", "narrow", "ancient", "modern", "windy", "rainy", "sunny",
    "peaceful", "bustling", "colorful", "distant", "familiar", "pleasant", "lively",
];

pub const GENERAL_PLACES: &[&str] = &[
    "market", "harbor", "library", "bakery", "museum", "garden", "bridge", "station", "theater",
    "bookshop", "cafe", "orchard", "plaza", "lighthouse", "gallery", "fountain",
];

pub const GENERAL_CITIES: &[&str] = &[
    "Lisbon", "Kyoto", "Oslo", "Porto", "Vienna", "Prague", "Dublin", "Geneva", "Marseille",
    "Valencia", "Krakow", "Bergen", "Seville", "Bologna", "Zagreb", "Tallinn",
];

pub const GENERAL_GOODS: &[&str] = &[
    "fresh bread",
    "roasted coffee",
    "cut flowers",
    "ripe peaches",
    "sea salt",
    "olive oil",
    "woven baskets",
    "cedar shelves",
    "sweet plums",
    "green tea",
    "wild honey",
    "pressed cider",
];

pub const WEEKDAYS: &[&str] = &[
    "Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday",
];
