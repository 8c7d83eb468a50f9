//! Communication-aware deployment planning for robot teams on grid maps.
//!
//! The crate is layered bottom-up:
//!
//! - [`gridmap`]: occupancy grids, geometry and obstacle raycasting.
//! - [`radio`]: log-distance path loss with wall shadowing and seeded
//!   multipath, coverage fields and the guaranteed coverage distance.
//! - [`eikonal`]: Fast Marching, communication-aware speed fields and
//!   gradient-descent path extraction.
//! - [`connectivity`]: connectivity graphs, min-hop trees, relay synthesis,
//!   Hungarian allocation and the feasibility test.
//! - [`clustering`]: goal clustering and exhaustive visit ordering.
//! - [`mission`]: the four planners, discrete-time execution, replanning and
//!   metrics.
//!
//! ```
//! use relaynet::gridmap::{parse_map, CellIndex};
//! use relaynet::eikonal::{base_velocity, extract_path, solve_eikonal};
//!
//! let map = parse_map("width 6\nheight 1\nresolution 1\n......\n").unwrap();
//! let d = solve_eikonal(&base_velocity(&map), CellIndex::new(5, 0)).unwrap();
//! let path = extract_path(&d, CellIndex::new(0, 0)).unwrap();
//! assert!((path.length - 5.0).abs() < 1e-9);
//! ```

pub mod clustering;
pub mod connectivity;
pub mod eikonal;
pub mod error;
pub mod gridmap;
pub mod mission;
pub mod radio;

pub use error::{Error, ErrorClass, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    pub struct Intro;
    #[doc = include_str!("../../../book/src/maps.md")]
    pub struct Maps;
    #[doc = include_str!("../../../book/src/radio.md")]
    pub struct Radio;
    #[doc = include_str!("../../../book/src/paths.md")]
    pub struct Paths;
    #[doc = include_str!("../../../book/src/connectivity.md")]
    pub struct Connectivity;
    #[doc = include_str!("../../../book/src/clustering.md")]
    pub struct Clustering;
    #[doc = include_str!("../../../book/src/missions.md")]
    pub struct Missions;
}
