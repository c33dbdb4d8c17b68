import java.util.Scanner;

public class Main {
    public static void main(String[] args) {
        Scanner sc = new Scanner(System.in);
        int[] counts = new int[26];
        while (sc.hasNextLine()) {
            String text = sc.nextLine().toLowerCase();
            for (int i = 0; i < text.length(); i++) {
                char ch = text.charAt(i);
                if (ch >= 'a' && ch <= 'z') {
                    counts[ch - 'a']++;
                }
            }
        }
        for (int k = 0; k < 26; k++) {
            char letter = (char) ('a' + k);
            System.out.println(letter + " : " + counts[k]);
        }
    }
}
