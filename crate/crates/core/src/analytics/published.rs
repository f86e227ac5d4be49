//! Published visual accuracy scores and the correlation cells derived from
//! them, used as reproduction targets.

use super::ScoreVector;

/// Columns of the six-configuration studies: three Eulerian and three
/// Lagrangian resolutions, in that order.
pub const CONFIG_ITEMS: [&str; 6] = ["eu-1x", "eu-2x", "eu-4x", "la-1x", "la-2x", "la-3x"];
pub const METHOD_ITEMS: [&str; 7] = ["mp", "ls", "flip", "apic", "wcsph", "iisph", "sph"];
pub const BUDGET_ITEMS: [&str; 4] = ["flip", "apic", "iisph", "sph"];
pub const SCALE_ITEMS: [&str; 7] = ["0.5x", "0.75x", "1x", "1.5x", "2x", "3x", "4x"];
pub const SPLASH_ITEMS: [&str; 4] = ["mp", "flip", "mlflip", "sph"];
pub const PLATFORM_ITEMS: [&str; 7] = ["a1", "a2", "a3", "a4", "a5", "a6", "a7"];

#[derive(Clone, Copy, Debug)]
pub struct PublishedRow {
    pub id: &'static str,
    pub description: &'static str,
    pub items: &'static [&'static str],
    pub scores: &'static [f64],
    pub std_errors: &'static [f64],
}

impl PublishedRow {
    pub fn to_score_vector(&self) -> ScoreVector {
        let anchor = (0..self.scores.len())
            .find(|&i| self.scores[i] == 0.0 && self.std_errors[i] == 0.0)
            .unwrap_or(0);
        ScoreVector {
            items: self.items.iter().map(|s| s.to_string()).collect(),
            scores: self.scores.to_vec(),
            std_errors: self.std_errors.to_vec(),
            anchor,
        }
    }
}

macro_rules! row {
    ($id:literal, $desc:literal, $items:expr, [$($s:expr),*], [$($e:expr),*]) => {
        PublishedRow { id: $id, description: $desc, items: &$items, scores: &[$($s),*], std_errors: &[$($e),*] }
    };
}

pub const ROWS: &[PublishedRow] = &[
    row!("A", "dam, opaque, with reference", CONFIG_ITEMS,
        [0.0, 3.1368, 4.6271, 4.9480, 6.5291, 6.7529], [0.0, 0.4584, 0.4786, 0.4813, 0.4961, 0.4989]),
    row!("A*", "dam, opaque", CONFIG_ITEMS,
        [0.0, 1.0822, 1.6328, 0.0579, 0.9089, 1.0300], [0.0, 0.1975, 0.2083, 0.1964, 0.1955, 0.1968]),
    row!("B", "dam, transparent, with reference", CONFIG_ITEMS,
        [0.0, 2.0498, 3.8288, 2.8715, 4.6016, 5.3260], [0.0, 0.3272, 0.3572, 0.3428, 0.3700, 0.3864]),
    row!("B*", "dam, transparent", CONFIG_ITEMS,
        [1.6860, 1.7125, 1.5685, 0.8198, 0.4223, 0.0], [0.1785, 0.1789, 0.1765, 0.1694, 0.1695, 0.0]),
    row!("C", "wave, opaque, with reference", CONFIG_ITEMS,
        [0.0, 3.2189, 3.6823, 3.0738, 5.2235, 5.0324], [0.0, 0.4720, 0.4771, 0.4701, 0.4996, 0.4958]),
    row!("D", "dam, opaque, with reference, APIC and IISPH", CONFIG_ITEMS,
        [0.0, 2.6095, 3.7208, 2.6466, 4.2966, 4.9892], [0.0, 0.3411, 0.3541, 0.3416, 0.3618, 0.3751]),
    row!("D*", "dam, opaque, APIC and IISPH", CONFIG_ITEMS,
        [0.1480, 1.5857, 2.0321, 0.0, 1.4117, 1.8044], [0.1816, 0.1857, 0.1933, 0.0, 0.1835, 0.1890]),
    row!("E*", "dam, blend 25%", CONFIG_ITEMS,
        [0.0, -0.0776, 0.0, -1.9924, -1.4552, -1.6837], [0.0, 0.1762, 0.1769, 0.1972, 0.1849, 0.1895]),
    row!("F*", "dam, blend 50%", CONFIG_ITEMS,
        [0.0, 0.1456, 0.2132, -1.2302, -0.6418, -0.7460], [0.0, 0.1629, 0.1636, 0.1726, 0.1629, 0.1641]),
    row!("G*", "dam, blend 75%", CONFIG_ITEMS,
        [0.0, 0.8031, 1.1089, -1.0177, -0.2983, -0.2034], [0.0, 0.1843, 0.1919, 0.1914, 0.1779, 0.1772]),
    row!("H*", "dam, glossy", CONFIG_ITEMS,
        [0.0, 0.5613, 0.8232, -0.7548, 0.1286, 0.0537], [0.0, 0.1489, 0.1524, 0.1553, 0.1465, 0.1465]),
    row!("I*", "dam, translucent", CONFIG_ITEMS,
        [0.0, 0.8324, 0.8324, -0.2321, 0.1135, 0.0723], [0.0, 0.1484, 0.1484, 0.1456, 0.1437, 0.1438]),
    row!("J", "dam, seven methods", METHOD_ITEMS,
        [0.0, 0.1248, 2.0613, 3.4211, 2.6271, 4.4595, 4.3855],
        [0.0, 0.1769, 0.1962, 0.2136, 0.2039, 0.2294, 0.2280]),
    row!("K", "wave, seven methods", METHOD_ITEMS,
        [0.0, 1.6646, 2.6871, 2.6987, 0.7209, 3.7943, 3.7943],
        [0.0, 0.1943, 0.2058, 0.2060, 0.1876, 0.2229, 0.2229]),
    row!("L", "dam, similar computation time", BUDGET_ITEMS,
        [1.5215, 2.8256, 0.0, 0.1410], [0.3387, 0.4205, 0.0, 0.3070]),
    row!("M", "particle skinning scales", SCALE_ITEMS,
        [0.0, 0.9397, 1.0235, 1.9248, 2.7473, 2.7891, 2.9170],
        [0.0, 0.2308, 0.2310, 0.2393, 0.2533, 0.2542, 0.2572]),
    row!("N", "splash, first study", SPLASH_ITEMS,
        [0.0, 2.2833, 4.1758, 5.0077], [0.0, 0.3723, 0.4353, 0.4569]),
    row!("O", "splash, second study", SPLASH_ITEMS,
        [0.0, 1.8312, 2.6612, 3.5203], [0.0, 0.3069, 0.3282, 0.3538]),
    row!("CF", "platform comparison, CF", PLATFORM_ITEMS,
        [0.3317, 0.2673, 1.1146, 1.6024, 0.0, 0.8540, 1.2931],
        [0.1637, 0.1640, 0.1665, 0.1744, 0.0, 0.1643, 0.1688]),
    row!("MW", "platform comparison, MW", PLATFORM_ITEMS,
        [0.6556, 0.3539, 0.9845, 1.8701, 0.0, 1.2118, 1.7273],
        [0.1685, 0.1693, 0.1696, 0.1820, 0.0, 0.1715, 0.1790]),
    row!("MT", "platform comparison, MT", PLATFORM_ITEMS,
        [0.3677, 0.0, 0.7923, 1.8208, 0.0, 1.0997, 1.5849],
        [0.1661, 0.1687, 0.1666, 0.1820, 0.0, 0.1692, 0.1766]),
];

pub fn row(id: &str) -> Option<&'static PublishedRow> {
    ROWS.iter().find(|r| r.id == id)
}

/// A published correlation between two score rows, compared by position.
#[derive(Clone, Copy, Debug)]
pub struct PublishedCorrelation {
    pub id: &'static str,
    pub x: &'static str,
    pub y: &'static str,
    pub r: f64,
    pub p: f64,
}

/// Every published (r, p) cell. The wave study without reference has no
/// published score row, so "A* vs C*" is paired against row C, the only
/// wave row available.
pub const CORRELATIONS: &[PublishedCorrelation] = &[
    PublishedCorrelation { id: "C0", x: "A", y: "B", r: 0.97347, p: 0.00105 },
    PublishedCorrelation { id: "C1", x: "A", y: "C", r: 0.96557, p: 0.00176 },
    PublishedCorrelation { id: "C2", x: "A*", y: "B*", r: -0.01308, p: 0.98039 },
    PublishedCorrelation { id: "C3", x: "A*", y: "C", r: 0.83895, p: 0.03682 },
    PublishedCorrelation { id: "C4", x: "A", y: "A*", r: 0.64540, p: 0.16632 },
    PublishedCorrelation { id: "C5", x: "B", y: "B*", r: -0.60960, p: 0.19887 },
    PublishedCorrelation { id: "C6", x: "A", y: "D", r: 0.96057, p: 0.00230 },
    PublishedCorrelation { id: "C7", x: "A*", y: "D*", r: 0.96932, p: 0.00140 },
    PublishedCorrelation { id: "C8", x: "D", y: "D*", r: 0.72139, p: 0.10562 },
    PublishedCorrelation { id: "opaque/glossy", x: "A*", y: "H*", r: 0.94329, p: 0.00473 },
    PublishedCorrelation { id: "opaque/translucent", x: "A*", y: "I*", r: 0.93170, p: 0.00684 },
    PublishedCorrelation { id: "transparent/glossy", x: "B*", y: "H*", r: 0.55867, p: 0.24918 },
    PublishedCorrelation { id: "transparent/translucent", x: "B*", y: "I*", r: 0.59764, p: 0.21027 },
    PublishedCorrelation { id: "CF/MW", x: "CF", y: "MW", r: 0.95808, p: 0.00068 },
    PublishedCorrelation { id: "MW/MT", x: "MW", y: "MT", r: 0.98596, p: 0.00004 },
    PublishedCorrelation { id: "MT/CF", x: "MT", y: "CF", r: 0.95170, p: 0.00096 },
];

pub const R_TOLERANCE: f64 = 1e-3;
pub const P_TOLERANCE: f64 = 2e-4;
