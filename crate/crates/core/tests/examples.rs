//! Every example compiles as a module here and its `main` runs to completion.

mod resolvents {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/resolvents.rs"));

    pub fn run() -> mmsde::Result<()> {
        main()
    }
}

#[test]
fn resolvents_example_runs() {
    resolvents::run().expect("resolvents example");
}

mod projections {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/projections.rs"));

    pub fn run() -> mmsde::Result<()> {
        main()
    }
}

#[test]
fn projections_example_runs() {
    projections::run().expect("projections example");
}

mod step_paths {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/step_paths.rs"));

    pub fn run() -> mmsde::Result<()> {
        main()
    }
}

#[test]
fn step_paths_example_runs() {
    step_paths::run().expect("step_paths example");
}

mod reflection {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/reflection.rs"));

    pub fn run() -> mmsde::Result<()> {
        main()
    }
}

#[test]
fn reflection_example_runs() {
    reflection::run().expect("reflection example");
}

mod drivers {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/drivers.rs"));

    pub fn run() -> mmsde::Result<()> {
        main()
    }
}

#[test]
fn drivers_example_runs() {
    drivers::run().expect("drivers example");
}

mod euler_scheme {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/euler_scheme.rs"));

    pub fn run() -> mmsde::Result<()> {
        main()
    }
}

#[test]
fn euler_scheme_example_runs() {
    euler_scheme::run().expect("euler_scheme example");
}

mod yosida_schemes {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/yosida_schemes.rs"));

    pub fn run() -> mmsde::Result<()> {
        main()
    }
}

#[test]
fn yosida_schemes_example_runs() {
    yosida_schemes::run().expect("yosida_schemes example");
}

mod truncation {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/truncation.rs"));

    pub fn run() -> mmsde::Result<()> {
        main()
    }
}

#[test]
fn truncation_example_runs() {
    truncation::run().expect("truncation example");
}

mod convergence_study {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/convergence_study.rs"));

    pub fn run() -> mmsde::Result<()> {
        main()
    }
}

#[test]
fn convergence_study_example_runs() {
    convergence_study::run().expect("convergence_study example");
}

mod verify_suite {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/verify_suite.rs"));

    pub fn run() -> mmsde::Result<()> {
        main()
    }
}

#[test]
fn verify_suite_example_runs() {
    verify_suite::run().expect("verify_suite example");
}
