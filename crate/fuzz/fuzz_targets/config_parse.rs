#![no_main]

use isac_uav::ScenarioConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = ScenarioConfig::from_toml_str(text) {
        // Anything accepted must serialize and be accepted again.
        let again = ScenarioConfig::from_toml_str(&config.to_toml())
            .expect("re-parsing a serialized config");
        assert_eq!(again.trials, config.trials);
        assert_eq!(again.seed, config.seed);
        assert_eq!(again.budget, config.budget);
    }
});
